#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ekey {

enum class DiscriminatorId : std::uint8_t {
  ValueTransfer = 1,
  TypicalHash = 2,
  BDNN = 3,
  PerceptualHash = 4,
};

const char* discriminator_name(DiscriminatorId id) noexcept;
// Accepts "vt", "hash", "bdnn", "phash" and the long enumerator names.
DiscriminatorId parse_discriminator(std::string_view name);
bool is_valid_discriminator(std::uint8_t raw) noexcept;

// A derived possibleKey. Bits are numbered MSB-first: bit 0 is the most
// significant bit of octet 0, i.e. the high bit of the first hex digit.
//
// Equality and ordering look at the bit string only; discriminator_id is
// provenance metadata and two discriminators producing the same bits produce
// the same key.
class KeyMaterial {
 public:
  KeyMaterial(std::vector<std::uint8_t> octets, DiscriminatorId id);

  static KeyMaterial zeros(std::size_t width_bits, DiscriminatorId id);
  static KeyMaterial from_bits(std::span<const bool> bits, DiscriminatorId id);

  std::size_t width() const noexcept { return octets_.size() * 8; }
  DiscriminatorId discriminator() const noexcept { return id_; }
  std::span<const std::uint8_t> octets() const noexcept { return octets_; }
  bool bit(std::size_t index) const;

  KeyMaterial with_discriminator(DiscriminatorId id) const;

  friend bool operator==(const KeyMaterial& a, const KeyMaterial& b) noexcept {
    return a.octets_ == b.octets_;
  }
  friend std::strong_ordering operator<=>(const KeyMaterial& a,
                                          const KeyMaterial& b) noexcept;

 private:
  std::vector<std::uint8_t> octets_;
  DiscriminatorId id_;
};

bool is_supported_key_width(std::size_t width_bits) noexcept;

// Lowercase, zero-padded to width/4 digits.
std::string to_hex(const KeyMaterial& key);
// Inverse of to_hex. Throws Error{InvalidInput} carrying the offset of the
// first bad character, or Error{Unsupported} for a length other than 32/64.
KeyMaterial from_hex(std::string_view text, DiscriminatorId id);

std::string hex_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> hex_decode(std::string_view text);

}  // namespace ekey
