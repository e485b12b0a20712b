#include "bdnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/error.hpp"

namespace ekey::bdnn {

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

const char* layer_name(LayerType type) noexcept {
  switch (type) {
    case LayerType::Conv: return "Conv";
    case LayerType::Relu: return "Relu";
    case LayerType::Pool: return "Pool";
    case LayerType::Affine: return "Affine";
    case LayerType::Dropout: return "Dropout";
    case LayerType::Sigmoid: return "Sigmoid";
    case LayerType::Softmax: return "Softmax";
  }
  return "?";
}

Layer Layer::conv(std::uint32_t out_channels, std::uint32_t kernel, std::uint32_t stride,
                  std::uint32_t pad) {
  Layer l = of(LayerType::Conv);
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  return l;
}

Layer Layer::affine(std::uint32_t units) {
  Layer l = of(LayerType::Affine);
  l.units = units;
  return l;
}

Layer Layer::dropout(double rate) {
  Layer l = of(LayerType::Dropout);
  l.rate = rate;
  return l;
}

namespace {

Shape infer_shape(Layer& layer, const Shape& in) {
  switch (layer.type) {
    case LayerType::Conv: {
      if (layer.out_channels == 0 || layer.kernel == 0 || layer.stride == 0) {
        throw Error(ErrorCode::Format, "Conv layer needs positive channels, kernel and stride");
      }
      const std::int64_t span_h = std::int64_t{in.height} + 2 * layer.pad - layer.kernel;
      const std::int64_t span_w = std::int64_t{in.width} + 2 * layer.pad - layer.kernel;
      if (span_h < 0 || span_w < 0) {
        throw Error(ErrorCode::Format, "Conv kernel larger than padded input " + to_string(in));
      }
      return {layer.out_channels, static_cast<std::uint32_t>(span_h / layer.stride + 1),
              static_cast<std::uint32_t>(span_w / layer.stride + 1)};
    }
    case LayerType::Pool:
      if (in.height < 2 || in.width < 2) {
        throw Error(ErrorCode::Format, "Pool needs at least 2x2 input, got " + to_string(in));
      }
      return {in.channels, in.height / 2, in.width / 2};
    case LayerType::Affine:
      if (layer.units == 0) throw Error(ErrorCode::Format, "Affine layer needs units > 0");
      return {layer.units, 1, 1};
    case LayerType::Dropout:
      if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
        throw Error(ErrorCode::Format, "Dropout rate must lie in [0, 1)");
      }
      return in;
    case LayerType::Relu:
    case LayerType::Sigmoid:
    case LayerType::Softmax:
      return in;
  }
  throw Error(ErrorCode::Format, "unknown layer type");
}

std::size_t weight_count(const Layer& l) {
  if (l.type == LayerType::Conv)
    return std::size_t{l.out_channels} * l.in_shape.channels * l.kernel * l.kernel;
  if (l.type == LayerType::Affine) return std::size_t{l.units} * l.in_shape.size();
  return 0;
}

std::size_t fan_in(const Layer& l) {
  if (l.type == LayerType::Conv) return std::size_t{l.in_shape.channels} * l.kernel * l.kernel;
  return l.in_shape.size();
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

NetworkModel::NetworkModel(Shape input, std::vector<Layer> layers, std::size_t key_layer_index,
                           BucketizerConfig bucketizer)
    : input_(input), layers_(std::move(layers)), key_layer_(key_layer_index),
      bucketizer_(bucketizer) {
  if (input_.size() == 0) throw Error(ErrorCode::Format, "network input shape is empty");
  if (layers_.empty()) throw Error(ErrorCode::Format, "network has no layers");
  if (key_layer_ >= layers_.size() || layers_[key_layer_].type != LayerType::Affine) {
    throw Error(ErrorCode::Format, "key layer index must point at an Affine layer");
  }
  if (!(bucketizer_.threshold > 0.0 && bucketizer_.threshold < 1.0)) {
    throw Error(ErrorCode::Format, "bucketizer threshold must lie in (0, 1)");
  }
  Shape cur = input_;
  for (auto& layer : layers_) {
    layer.in_shape = cur;
    layer.out_shape = infer_shape(layer, cur);
    cur = layer.out_shape;
    if (layer.has_parameters()) {
      layer.weights.resize(weight_count(layer), 0.0);
      layer.bias.resize(layer.out_shape.channels, 0.0);
    } else {
      layer.weights.clear();
      layer.bias.clear();
    }
  }
}

std::size_t NetworkModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

void NetworkModel::validate_for_keying() const {
  const auto& key = layers_[key_layer_];
  if (key.type != LayerType::Affine || key.units != kKeyUnits) {
    throw Error(ErrorCode::Format, "key layer must be Affine(128)");
  }
  if (key_layer_ + 1 >= layers_.size() || layers_[key_layer_ + 1].type != LayerType::Sigmoid) {
    throw Error(ErrorCode::Format, "key layer must be followed by Sigmoid");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i != key_layer_ && layers_[i].type == LayerType::Affine && layers_[i].units == kKeyUnits) {
      throw Error(ErrorCode::Format, "more than one Affine(128) layer");
    }
  }
  const auto& last = layers_.back();
  if (last.type != LayerType::Softmax || last.out_shape.size() != 2) {
    throw Error(ErrorCode::Format, "final layer must be a 2-class Softmax");
  }
}

void NetworkModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) {
    if (!l.has_parameters()) continue;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in(l)));
    for (double& w : l.weights) w = rng.normal() * stddev;
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  round_to_float();
}

void NetworkModel::round_to_float() {
  for (auto& l : layers_) {
    for (double& w : l.weights) w = static_cast<double>(static_cast<float>(w));
    for (double& b : l.bias) b = static_cast<double>(static_cast<float>(b));
  }
}

bool operator==(const NetworkModel& a, const NetworkModel& b) {
  if (!(a.input_ == b.input_) || a.key_layer_ != b.key_layer_ ||
      a.bucketizer_.threshold != b.bucketizer_.threshold || a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.type != y.type || x.out_channels != y.out_channels || x.kernel != y.kernel ||
        x.stride != y.stride || x.pad != y.pad || x.units != y.units || x.rate != y.rate ||
        x.weights != y.weights || x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

NetworkModel default_architecture(double dropout_rate) {
  std::vector<Layer> layers = {
      Layer::conv(8, 3, 1, 1), Layer::relu(), Layer::pool(),
      Layer::conv(16, 3, 1, 1), Layer::relu(), Layer::pool(),
      Layer::affine(kKeyUnits), Layer::sigmoid(), Layer::dropout(dropout_rate),
      Layer::affine(2), Layer::softmax(),
  };
  return NetworkModel({1, 32, 32}, std::move(layers), 6);
}

// --- forward ----------------------------------------------------------------

namespace {

void conv_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const auto& is = l.in_shape;
  const auto& os = l.out_shape;
  const std::uint32_t k = l.kernel;
  for (std::uint32_t o = 0; o < os.channels; ++o) {
    for (std::uint32_t oy = 0; oy < os.height; ++oy) {
      for (std::uint32_t ox = 0; ox < os.width; ++ox) {
        double sum = l.bias[o];
        for (std::uint32_t c = 0; c < is.channels; ++c) {
          const double* w = &l.weights[(std::size_t{o} * is.channels + c) * k * k];
          for (std::uint32_t ky = 0; ky < k; ++ky) {
            const std::int64_t iy = std::int64_t{oy} * l.stride + ky - l.pad;
            if (iy < 0 || iy >= is.height) continue;
            for (std::uint32_t kx = 0; kx < k; ++kx) {
              const std::int64_t ix = std::int64_t{ox} * l.stride + kx - l.pad;
              if (ix < 0 || ix >= is.width) continue;
              sum += w[ky * k + kx] * in.at(c, static_cast<std::uint32_t>(iy),
                                            static_cast<std::uint32_t>(ix));
            }
          }
        }
        out.at(o, oy, ox) = sum;
      }
    }
  }
}

void conv_backward(const Layer& l, const Tensor& in, const Tensor& dout, double scale,
                   std::vector<double>& dw, std::vector<double>& db, Tensor& din) {
  const auto& is = l.in_shape;
  const auto& os = l.out_shape;
  const std::uint32_t k = l.kernel;
  for (std::uint32_t o = 0; o < os.channels; ++o) {
    for (std::uint32_t oy = 0; oy < os.height; ++oy) {
      for (std::uint32_t ox = 0; ox < os.width; ++ox) {
        const double g = dout.at(o, oy, ox);
        if (g == 0.0) continue;
        db[o] += g * scale;
        for (std::uint32_t c = 0; c < is.channels; ++c) {
          const std::size_t base = (std::size_t{o} * is.channels + c) * k * k;
          for (std::uint32_t ky = 0; ky < k; ++ky) {
            const std::int64_t iy = std::int64_t{oy} * l.stride + ky - l.pad;
            if (iy < 0 || iy >= is.height) continue;
            for (std::uint32_t kx = 0; kx < k; ++kx) {
              const std::int64_t ix = std::int64_t{ox} * l.stride + kx - l.pad;
              if (ix < 0 || ix >= is.width) continue;
              const auto uy = static_cast<std::uint32_t>(iy);
              const auto ux = static_cast<std::uint32_t>(ix);
              dw[base + ky * k + kx] += g * in.at(c, uy, ux) * scale;
              din.at(c, uy, ux) += g * l.weights[base + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

void pool_forward(const Layer& l, const Tensor& in, Tensor& out, std::vector<std::uint32_t>& arg) {
  const auto& os = l.out_shape;
  arg.assign(os.size(), 0);
  std::size_t idx = 0;
  for (std::uint32_t c = 0; c < os.channels; ++c) {
    for (std::uint32_t oy = 0; oy < os.height; ++oy) {
      for (std::uint32_t ox = 0; ox < os.width; ++ox, ++idx) {
        double best = -std::numeric_limits<double>::infinity();
        std::uint32_t best_at = 0;
        for (std::uint32_t dy = 0; dy < 2; ++dy) {
          for (std::uint32_t dx = 0; dx < 2; ++dx) {
            const std::uint32_t y = 2 * oy + dy;
            const std::uint32_t x = 2 * ox + dx;
            const double v = in.at(c, y, x);
            if (v > best) {
              best = v;
              best_at = static_cast<std::uint32_t>((std::size_t{c} * l.in_shape.height + y) *
                                                       l.in_shape.width + x);
            }
          }
        }
        out.data[idx] = best;
        arg[idx] = best_at;
      }
    }
  }
}

void affine_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const std::size_t n_in = in.data.size();
  for (std::uint32_t u = 0; u < l.units; ++u) {
    const double* w = &l.weights[std::size_t{u} * n_in];
    double sum = l.bias[u];
    for (std::size_t i = 0; i < n_in; ++i) sum += w[i] * in.data[i];
    out.data[u] = sum;
  }
}

void softmax_inplace(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : v) x /= total;
}

}  // namespace

void forward_pass(const NetworkModel& model, const Tensor& input, Mode mode, Rng* rng,
                  Trace& trace, const std::vector<std::vector<std::uint8_t>>* fixed_masks) {
  const auto& layers = model.layers();
  if (!(input.shape == model.input_shape())) {
    throw Error(ErrorCode::Shape, "input shape " + to_string(input.shape) + " does not match " +
                                      to_string(model.input_shape()));
  }
  trace.input = input;
  trace.outputs.resize(layers.size());
  trace.masks.resize(layers.size());
  trace.argmax.resize(layers.size());

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    const Tensor& in = i == 0 ? trace.input : trace.outputs[i - 1];
    Tensor& out = trace.outputs[i];
    out = Tensor(l.out_shape);
    switch (l.type) {
      case LayerType::Conv: conv_forward(l, in, out); break;
      case LayerType::Relu:
        for (std::size_t j = 0; j < in.data.size(); ++j) out.data[j] = std::max(0.0, in.data[j]);
        break;
      case LayerType::Pool: pool_forward(l, in, out, trace.argmax[i]); break;
      case LayerType::Affine: affine_forward(l, in, out); break;
      case LayerType::Sigmoid:
        for (std::size_t j = 0; j < in.data.size(); ++j) out.data[j] = sigmoid(in.data[j]);
        break;
      case LayerType::Softmax:
        out.data = in.data;
        softmax_inplace(out.data);
        break;
      case LayerType::Dropout: {
        auto& mask = trace.masks[i];
        if (mode == Mode::Inference || l.rate == 0.0) {
          mask.clear();  // identity, no rescaling
          out.data = in.data;
          break;
        }
        if (fixed_masks != nullptr) {
          mask = (*fixed_masks)[i];
        } else {
          if (rng == nullptr) throw Error(ErrorCode::Internal, "training dropout needs an rng");
          mask.resize(in.data.size());
          for (auto& m : mask) m = rng->uniform() >= l.rate ? 1 : 0;
        }
        const double keep_scale = 1.0 / (1.0 - l.rate);
        for (std::size_t j = 0; j < in.data.size(); ++j)
          out.data[j] = mask[j] ? in.data[j] * keep_scale : 0.0;
        break;
      }
    }
  }
}

double sample_loss(const NetworkModel& model, const Trace& trace, int label, double lambda) {
  const auto& probs = trace.outputs.back().data;
  double loss = -std::log(std::max(probs.at(static_cast<std::size_t>(label)), 1e-300));
  if (lambda != 0.0) {
    const auto& a = trace.outputs[model.key_layer_index() + 1].data;
    double penalty = 0.0;
    for (double v : a) penalty += v * (1.0 - v);
    loss += lambda * penalty / static_cast<double>(a.size());
  }
  return loss;
}

Gradients::Gradients(const NetworkModel& model) {
  for (const auto& l : model.layers()) {
    weights.emplace_back(l.weights.size(), 0.0);
    bias.emplace_back(l.bias.size(), 0.0);
  }
  input = Tensor(model.input_shape());
}

void Gradients::clear() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
  std::fill(input.data.begin(), input.data.end(), 0.0);
}

void backward(const NetworkModel& model, const Trace& trace, int label, double lambda,
              double scale, Gradients& grads) {
  const auto& layers = model.layers();
  const std::size_t n = layers.size();
  if (layers.back().type != LayerType::Softmax) {
    throw Error(ErrorCode::Format, "training needs a final Softmax layer");
  }
  const std::size_t penalty_at = model.key_layer_index() + 1;

  // Softmax + cross-entropy collapse to (p - onehot) at the softmax input.
  Tensor grad(layers.back().in_shape);
  const auto& probs = trace.outputs.back().data;
  for (std::size_t j = 0; j < probs.size(); ++j)
    grad.data[j] = probs[j] - (static_cast<int>(j) == label ? 1.0 : 0.0);

  for (std::size_t step = 1; step <= n; ++step) {
    const std::size_t i = n - step;
    const Layer& l = layers[i];
    const Tensor& in = i == 0 ? trace.input : trace.outputs[i - 1];
    const Tensor& out = trace.outputs[i];

    if (i != n - 1) {
      // grad currently holds dL/d(out_i).
      if (i == penalty_at && lambda != 0.0) {
        const double w = lambda / static_cast<double>(out.data.size());
        for (std::size_t j = 0; j < out.data.size(); ++j)
          grad.data[j] += w * (1.0 - 2.0 * out.data[j]);
      }
      Tensor din(l.in_shape);
      switch (l.type) {
        case LayerType::Conv:
          conv_backward(l, in, grad, scale, grads.weights[i], grads.bias[i], din);
          break;
        case LayerType::Relu:
          for (std::size_t j = 0; j < din.data.size(); ++j)
            din.data[j] = in.data[j] > 0.0 ? grad.data[j] : 0.0;
          break;
        case LayerType::Pool: {
          const auto& arg = trace.argmax[i];
          for (std::size_t j = 0; j < grad.data.size(); ++j) din.data[arg[j]] += grad.data[j];
          break;
        }
        case LayerType::Affine: {
          const std::size_t n_in = in.data.size();
          auto& dw = grads.weights[i];
          auto& db = grads.bias[i];
          for (std::uint32_t u = 0; u < l.units; ++u) {
            const double g = grad.data[u];
            if (g == 0.0) continue;
            db[u] += g * scale;
            const double* w = &l.weights[std::size_t{u} * n_in];
            double* dwu = &dw[std::size_t{u} * n_in];
            const double gs = g * scale;
            for (std::size_t k = 0; k < n_in; ++k) {
              dwu[k] += gs * in.data[k];
              din.data[k] += g * w[k];
            }
          }
          break;
        }
        case LayerType::Sigmoid:
          for (std::size_t j = 0; j < din.data.size(); ++j)
            din.data[j] = grad.data[j] * out.data[j] * (1.0 - out.data[j]);
          break;
        case LayerType::Dropout: {
          const auto& mask = trace.masks[i];
          if (mask.empty()) {
            din.data = grad.data;
            break;
          }
          const double keep_scale = 1.0 / (1.0 - l.rate);
          for (std::size_t j = 0; j < din.data.size(); ++j)
            din.data[j] = mask[j] ? grad.data[j] * keep_scale : 0.0;
          break;
        }
        case LayerType::Softmax: {
          double dot = 0.0;
          for (std::size_t j = 0; j < out.data.size(); ++j) dot += grad.data[j] * out.data[j];
          for (std::size_t j = 0; j < out.data.size(); ++j)
            din.data[j] = out.data[j] * (grad.data[j] - dot);
          break;
        }
      }
      grad = std::move(din);
    }
    // The final softmax has already been folded into grad above.
  }
  grads.input.data = grad.data;
  for (double& g : grads.input.data) g *= scale;
}

// --- inference ------------------------------------------------------------

Tensor image_to_tensor(const Bitmap& image, const Shape& expected) {
  image.validate();
  if (image.channels != expected.channels || image.height != expected.height ||
      image.width != expected.width) {
    throw Error(ErrorCode::Shape, "image is " + std::to_string(image.width) + "x" +
                                      std::to_string(image.height) + "x" +
                                      std::to_string(image.channels) + "; model expects " +
                                      std::to_string(expected.width) + "x" +
                                      std::to_string(expected.height) + "x" +
                                      std::to_string(expected.channels));
  }
  Tensor t(expected);
  for (std::uint32_t c = 0; c < expected.channels; ++c)
    for (std::uint32_t y = 0; y < expected.height; ++y)
      for (std::uint32_t x = 0; x < expected.width; ++x)
        t.at(c, y, x) = image.at(x, y, c) / 255.0;
  return t;
}

ForwardResult forward(const NetworkModel& model, const Bitmap& image) {
  model.validate_for_keying();
  Trace trace;
  forward_pass(model, image_to_tensor(image, model.input_shape()), Mode::Inference, nullptr, trace);
  ForwardResult result;
  result.key_activations = trace.outputs[model.key_layer_index() + 1].data;
  const auto& probs = trace.outputs.back().data;
  result.class_probs = {probs[0], probs[1]};
  return result;
}

KeyMaterial bucketize(const std::vector<double>& activations, const BucketizerConfig& cfg) {
  if (activations.size() != kKeyUnits) {
    throw Error(ErrorCode::InvalidInput, "bucketize expects 128 activations, got " +
                                             std::to_string(activations.size()));
  }
  bool bits[kKeyUnits];
  for (std::size_t i = 0; i < kKeyUnits; ++i) bits[i] = activations[i] >= cfg.threshold;
  return KeyMaterial::from_bits(bits, DiscriminatorId::BDNN);
}

KeyMaterial derive_key_bdnn(const NetworkModel& model, const Bitmap& image) {
  return bucketize(forward(model, image).key_activations, model.bucketizer());
}

BdnnDiscriminator::BdnnDiscriminator(NetworkModel model) : model_(std::move(model)) {
  model_.validate_for_keying();
}

KeyMaterial BdnnDiscriminator::derive(const AttributeSample& sample) const {
  if (sample.kind != SampleKind::Image) {
    throw Error(ErrorCode::InvalidInput, "B-DNN discriminator needs an image sample");
  }
  return derive_key_bdnn(model_, sample.image);
}

std::string BdnnDiscriminator::describe() const {
  return "b-dnn(" + std::to_string(model_.parameter_count()) + " parameters)";
}

}  // namespace ekey::bdnn
