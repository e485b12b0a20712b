#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/attribute.hpp"
#include "core/discriminator.hpp"
#include "core/key_material.hpp"
#include "core/random.hpp"

namespace ekey::bdnn {

struct Shape {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t size() const noexcept { return std::size_t{channels} * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// CHW activations in double precision.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(s.size(), 0.0) {}
  double& at(std::uint32_t c, std::uint32_t y, std::uint32_t x) {
    return data[(std::size_t{c} * shape.height + y) * shape.width + x];
  }
  double at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return data[(std::size_t{c} * shape.height + y) * shape.width + x];
  }
};

// Values are the on-disk layer tags.
enum class LayerType : std::uint8_t {
  Conv = 1,
  Relu = 2,
  Pool = 3,  // 2x2 max, stride 2
  Affine = 4,
  Dropout = 5,
  Sigmoid = 6,
  Softmax = 7,
};

const char* layer_name(LayerType type) noexcept;

struct Layer {
  LayerType type = LayerType::Relu;
  // Conv
  std::uint32_t out_channels = 0;
  std::uint32_t kernel = 0;
  std::uint32_t stride = 1;
  std::uint32_t pad = 0;
  // Affine
  std::uint32_t units = 0;
  // Dropout
  double rate = 0.0;

  // Conv: [out][in][ky][kx]; Affine: [unit][input]. Filled by NetworkModel.
  std::vector<double> weights;
  std::vector<double> bias;
  Shape in_shape;
  Shape out_shape;

  static Layer conv(std::uint32_t out_channels, std::uint32_t kernel, std::uint32_t stride = 1,
                    std::uint32_t pad = 0);
  static Layer affine(std::uint32_t units);
  static Layer dropout(double rate);
  static Layer of(LayerType t) {
    Layer l;
    l.type = t;
    return l;
  }
  static Layer relu() { return of(LayerType::Relu); }
  static Layer pool() { return of(LayerType::Pool); }
  static Layer sigmoid() { return of(LayerType::Sigmoid); }
  static Layer softmax() { return of(LayerType::Softmax); }

  bool has_parameters() const noexcept {
    return type == LayerType::Conv || type == LayerType::Affine;
  }
};

struct BucketizerConfig {
  double threshold = 0.5;
};

inline constexpr std::uint32_t kKeyUnits = 128;

// Layer stack, weights and bucketizer. Construction computes every layer's
// shapes and allocates zeroed parameters.
class NetworkModel {
 public:
  NetworkModel(Shape input, std::vector<Layer> layers, std::size_t key_layer_index,
               BucketizerConfig bucketizer = {});

  const Shape& input_shape() const noexcept { return input_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& mutable_layers() noexcept { return layers_; }
  std::size_t key_layer_index() const noexcept { return key_layer_; }
  const BucketizerConfig& bucketizer() const noexcept { return bucketizer_; }

  std::size_t parameter_count() const noexcept;
  // Throws Error{Format} unless the stack can serve as a key discriminator:
  // the key layer is Affine(128) followed by Sigmoid, no other Affine(128),
  // and the last layer is a 2-way Softmax.
  void validate_for_keying() const;

  // He-normal weights, zero biases, seeded; rounded to float32.
  void initialize(std::uint64_t seed);
  // Rounds every parameter to the nearest float32 so the model file is exact.
  void round_to_float();

  friend bool operator==(const NetworkModel& a, const NetworkModel& b);

 private:
  Shape input_;
  std::vector<Layer> layers_;
  std::size_t key_layer_;
  BucketizerConfig bucketizer_;
};

// Conv(8,3x3)/Relu/Pool, Conv(16,3x3)/Relu/Pool, Affine128/Sigmoid,
// Dropout(rate), Affine2/Softmax over a 32x32 gray input.
NetworkModel default_architecture(double dropout_rate = 0.3);

struct ForwardResult {
  std::vector<double> key_activations;
  std::array<double, 2> class_probs{};
};

// Inference; dropout is inert. The image must match the input shape exactly
// (Error{Shape} otherwise). Pixels are scaled to [0, 1].
ForwardResult forward(const NetworkModel& model, const Bitmap& image);
Tensor image_to_tensor(const Bitmap& image, const Shape& expected);

// bit i = activations[i] >= threshold.
KeyMaterial bucketize(const std::vector<double>& activations, const BucketizerConfig& cfg);

KeyMaterial derive_key_bdnn(const NetworkModel& model, const Bitmap& image);

// --- training machinery, shared by the trainer and gradient checking -------

// Everything backward() needs from one forward pass.
struct Trace {
  Tensor input;
  std::vector<Tensor> outputs;                   // per layer
  std::vector<std::vector<std::uint8_t>> masks;  // Dropout keep-masks
  std::vector<std::vector<std::uint32_t>> argmax;  // Pool winners
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
  Tensor input;

  explicit Gradients(const NetworkModel& model);
  void clear();
};

enum class Mode { Inference, Training };

// With Mode::Training dropout masks are drawn from rng, unless fixed_masks is
// supplied (one entry per layer, ignored for non-dropout layers).
void forward_pass(const NetworkModel& model, const Tensor& input, Mode mode, Rng* rng,
                  Trace& trace,
                  const std::vector<std::vector<std::uint8_t>>* fixed_masks = nullptr);

// Cross-entropy on the final softmax plus lambda * mean(a * (1 - a)) over the
// key-layer sigmoid outputs.
double sample_loss(const NetworkModel& model, const Trace& trace, int label, double lambda);

// Accumulates d(sample_loss)/d(parameters) * scale into grads, and sets
// grads.input to d(sample_loss)/d(input) * scale.
void backward(const NetworkModel& model, const Trace& trace, int label, double lambda,
              double scale, Gradients& grads);

class BdnnDiscriminator final : public Discriminator {
 public:
  explicit BdnnDiscriminator(NetworkModel model);

  DiscriminatorId id() const noexcept override { return DiscriminatorId::BDNN; }
  std::size_t key_width() const noexcept override { return kKeyUnits; }
  SampleKind input_kind() const noexcept override { return SampleKind::Image; }
  KeyMaterial derive(const AttributeSample& sample) const override;
  std::string describe() const override;

  const NetworkModel& model() const noexcept { return model_; }

 private:
  NetworkModel model_;
};

}  // namespace ekey::bdnn
