#include "phash/phash.hpp"

#include <algorithm>
#include <vector>

#include "core/error.hpp"

namespace ekey::phash {

namespace {

struct AxisWeight {
  std::uint32_t pixel;
  std::uint64_t weight;
};

// Overlap of each source pixel with each of the 9 target cells, in units of
// 1/9 pixel: pixel i covers [9i, 9i+9), cell j covers [j*len, (j+1)*len).
std::array<std::vector<AxisWeight>, kGridSize> axis_weights(std::uint32_t len) {
  std::array<std::vector<AxisWeight>, kGridSize> out;
  for (std::size_t j = 0; j < kGridSize; ++j) {
    const std::uint64_t lo = j * std::uint64_t{len};
    const std::uint64_t hi = (j + 1) * std::uint64_t{len};
    for (std::uint32_t i = static_cast<std::uint32_t>(lo / kGridSize); i < len; ++i) {
      const std::uint64_t p_lo = std::uint64_t{i} * kGridSize;
      const std::uint64_t p_hi = p_lo + kGridSize;
      if (p_lo >= hi) break;
      const std::uint64_t overlap = std::min(p_hi, hi) - std::max(p_lo, lo);
      if (overlap > 0) out[j].push_back({i, overlap});
    }
  }
  return out;
}

}  // namespace

FeatureGrid transpose(const FeatureGrid& grid) {
  FeatureGrid out;
  for (std::size_t r = 0; r < kGridSize; ++r)
    for (std::size_t c = 0; c < kGridSize; ++c) out(c, r) = grid(r, c);
  return out;
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  const std::uint32_t weighted = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>((weighted + 500u) / 1000u);
}

Bitmap to_gray(const Bitmap& image) {
  image.validate();
  if (image.channels == 1) return image;
  Bitmap gray(image.width, image.height, 1);
  for (std::uint32_t y = 0; y < image.height; ++y)
    for (std::uint32_t x = 0; x < image.width; ++x)
      gray.at(x, y) = luma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
  return gray;
}

FeatureGrid collect_features(const Bitmap& image) {
  if (image.width < kGridSize || image.height < kGridSize) {
    throw Error(ErrorCode::Shape, "image is " + std::to_string(image.width) + "x" +
                                      std::to_string(image.height) +
                                      "; perceptual hash needs at least 9x9");
  }
  const Bitmap gray = to_gray(image);
  const auto wx = axis_weights(gray.width);
  const auto wy = axis_weights(gray.height);
  const std::uint64_t cell_area = std::uint64_t{gray.width} * gray.height;

  FeatureGrid grid;
  for (std::size_t r = 0; r < kGridSize; ++r) {
    for (std::size_t c = 0; c < kGridSize; ++c) {
      std::uint64_t acc = 0;
      for (const auto& [y, w_y] : wy[r]) {
        std::uint64_t row_acc = 0;
        for (const auto& [x, w_x] : wx[c]) row_acc += w_x * gray.at(x, y);
        acc += w_y * row_acc;
      }
      grid(r, c) = static_cast<std::uint8_t>(acc / cell_area);
    }
  }
  return grid;
}

std::uint64_t row_hash(const FeatureGrid& grid) noexcept {
  std::uint64_t bits = 0;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) bits = bits << 1 | (grid(r, c) < grid(r, c + 1) ? 1u : 0u);
  return bits;
}

std::uint64_t col_hash(const FeatureGrid& grid) noexcept {
  std::uint64_t bits = 0;
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t r = 0; r < 8; ++r) bits = bits << 1 | (grid(r, c) < grid(r + 1, c) ? 1u : 0u);
  return bits;
}

KeyMaterial derive_key_phash(const Bitmap& image) {
  const FeatureGrid grid = collect_features(image);
  const std::uint64_t halves[2] = {row_hash(grid), col_hash(grid)};
  std::vector<std::uint8_t> octets;
  octets.reserve(16);
  for (std::uint64_t h : halves)
    for (int shift = 56; shift >= 0; shift -= 8) octets.push_back(static_cast<std::uint8_t>(h >> shift));
  return KeyMaterial(std::move(octets), DiscriminatorId::PerceptualHash);
}

KeyMaterial PerceptualHashDiscriminator::derive(const AttributeSample& sample) const {
  if (sample.kind != SampleKind::Image) {
    throw Error(ErrorCode::InvalidInput, "perceptual hash needs an image sample");
  }
  return derive_key_phash(sample.image);
}

}  // namespace ekey::phash
