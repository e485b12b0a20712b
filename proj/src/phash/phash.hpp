#pragma once

#include <array>
#include <cstdint>

#include "core/attribute.hpp"
#include "core/discriminator.hpp"
#include "core/key_material.hpp"

namespace ekey::phash {

inline constexpr std::size_t kGridSize = 9;

// 9x9 gray feature image, grid[row][col].
struct FeatureGrid {
  std::array<std::array<std::uint8_t, kGridSize>, kGridSize> cells{};

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return cells[row][col]; }
  std::uint8_t& operator()(std::size_t row, std::size_t col) { return cells[row][col]; }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

FeatureGrid transpose(const FeatureGrid& grid);

// gray = (299 R + 587 G + 114 B) / 1000, rounded half-up.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;
Bitmap to_gray(const Bitmap& image);

// Grayscale, then exact box-filter downsample to 9x9 (truncated mean).
// Rejects images smaller than 9x9 with Error{Shape}.
FeatureGrid collect_features(const Bitmap& image);

// Bit (r, c) for r, c in 0..7 is set iff grid[r][c] < grid[r][c+1]. Bits are
// packed row-major, bit 0 of the hash in the most significant position.
std::uint64_t row_hash(const FeatureGrid& grid) noexcept;
// Bit (r, c) is set iff grid[r][c] < grid[r+1][c], packed column-major, so
// col_hash(g) == row_hash(transpose(g)).
std::uint64_t col_hash(const FeatureGrid& grid) noexcept;

// row_hash || col_hash as a 128-bit key.
KeyMaterial derive_key_phash(const Bitmap& image);

class PerceptualHashDiscriminator final : public Discriminator {
 public:
  DiscriminatorId id() const noexcept override { return DiscriminatorId::PerceptualHash; }
  std::size_t key_width() const noexcept override { return 128; }
  SampleKind input_kind() const noexcept override { return SampleKind::Image; }
  KeyMaterial derive(const AttributeSample& sample) const override;
  std::string describe() const override { return "perceptual-hash(dhash 9x9)"; }
};

}  // namespace ekey::phash
