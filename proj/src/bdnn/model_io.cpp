#include "bdnn/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <string>

#include "core/error.hpp"
#include "core/image_io.hpp"

namespace ekey::bdnn {

namespace {

constexpr char kMagic[4] = {'B', 'D', 'N', 'N'};
constexpr std::uint32_t kMaxLayers = 1024;

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::Format, "model layer table runs past the payload", pos_);
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

void read_params(Reader& r, std::vector<double>& dest, const char* what, std::size_t layer) {
  const std::uint32_t n = r.u32();
  if (n != dest.size()) {
    throw Error(ErrorCode::Format, "layer " + std::to_string(layer) + " declares " +
                                       std::to_string(n) + " " + what + ", expected " +
                                       std::to_string(dest.size()));
  }
  if (r.remaining() / 4 < n) throw Error(ErrorCode::Format, "parameter block truncated", r.pos());
  for (double& v : dest) v = r.f32();
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.u32(model.input_shape().channels);
  w.u32(model.input_shape().height);
  w.u32(model.input_shape().width);
  w.u32(static_cast<std::uint32_t>(model.key_layer_index()));
  w.f32(model.bucketizer().threshold);
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u8(static_cast<std::uint8_t>(l.type));
    switch (l.type) {
      case LayerType::Conv:
        w.u32(l.out_channels);
        w.u32(l.kernel);
        w.u32(l.stride);
        w.u32(l.pad);
        break;
      case LayerType::Affine:
        w.u32(l.units);
        w.u32(0), w.u32(0), w.u32(0);
        break;
      case LayerType::Dropout:
        w.f32(l.rate);
        w.u32(0), w.u32(0), w.u32(0);
        break;
      default:
        w.u32(0), w.u32(0), w.u32(0), w.u32(0);
    }
  }
  for (const auto& l : model.layers()) {
    if (!l.has_parameters()) continue;
    w.u32(static_cast<std::uint32_t>(l.weights.size()));
    for (double v : l.weights) w.f32(v);
    w.u32(static_cast<std::uint32_t>(l.bias.size()));
    for (double v : l.bias) w.f32(v);
  }
  w.u32(crc_of(w.bytes()));
  return std::move(w.bytes());
}

NetworkModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::Format, "not a BDNN model file (bad magic)", 0);
  }
  if (bytes.size() < 12) throw Error(ErrorCode::Checksum, "model file truncated");
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (crc_of(body) != trailer.u32()) {
    throw Error(ErrorCode::Checksum, "model CRC-32 mismatch (file truncated or corrupted)");
  }

  Reader r(body);
  r.u32();  // magic
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::Format, "unsupported model format version " + std::to_string(version));
  }
  Shape input;
  input.channels = r.u32();
  input.height = r.u32();
  input.width = r.u32();
  const std::uint32_t key_index = r.u32();
  BucketizerConfig bucketizer{r.f32()};
  const std::uint32_t count = r.u32();
  if (count == 0 || count > kMaxLayers) {
    throw Error(ErrorCode::Format, "implausible layer count " + std::to_string(count));
  }
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t tag = r.u8();
    if (tag < 1 || tag > 7) throw Error(ErrorCode::Format, "unknown layer tag " + std::to_string(tag));
    Layer l = Layer::of(static_cast<LayerType>(tag));
    const std::uint32_t f[4] = {r.u32(), r.u32(), r.u32(), r.u32()};
    if (l.type == LayerType::Conv) {
      l.out_channels = f[0], l.kernel = f[1], l.stride = f[2], l.pad = f[3];
    } else if (l.type == LayerType::Affine) {
      l.units = f[0];
    } else if (l.type == LayerType::Dropout) {
      l.rate = static_cast<double>(std::bit_cast<float>(f[0]));
    }
    layers.push_back(l);
  }
  NetworkModel model(input, std::move(layers), key_index, bucketizer);
  std::size_t index = 0;
  for (auto& l : model.mutable_layers()) {
    if (l.has_parameters()) {
      read_params(r, l.weights, "weights", index);
      read_params(r, l.bias, "biases", index);
    }
    ++index;
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::Format, "trailing octets after parameter blocks", r.pos());
  }
  return model;
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

NetworkModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace ekey::bdnn
