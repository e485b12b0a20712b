#include "core/key_material.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace ekey {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "ok";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::KeyMismatch: return "key-mismatch";
    case ErrorCode::MacMismatch: return "mac-mismatch";
    case ErrorCode::PadCorrupt: return "pad-corrupt";
    case ErrorCode::Format: return "format";
    case ErrorCode::Checksum: return "checksum";
    case ErrorCode::Decode: return "decode";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Training: return "training";
    case ErrorCode::DiscriminatorMismatch: return "discriminator-mismatch";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

const char* discriminator_name(DiscriminatorId id) noexcept {
  switch (id) {
    case DiscriminatorId::ValueTransfer: return "vt";
    case DiscriminatorId::TypicalHash: return "hash";
    case DiscriminatorId::BDNN: return "bdnn";
    case DiscriminatorId::PerceptualHash: return "phash";
  }
  return "?";
}

DiscriminatorId parse_discriminator(std::string_view name) {
  if (name == "vt" || name == "ValueTransfer") return DiscriminatorId::ValueTransfer;
  if (name == "hash" || name == "TypicalHash") return DiscriminatorId::TypicalHash;
  if (name == "bdnn" || name == "BDNN") return DiscriminatorId::BDNN;
  if (name == "phash" || name == "PerceptualHash") return DiscriminatorId::PerceptualHash;
  throw Error(ErrorCode::InvalidArgument,
              "unknown discriminator '" + std::string(name) + "'");
}

bool is_valid_discriminator(std::uint8_t raw) noexcept { return raw >= 1 && raw <= 4; }

bool is_supported_key_width(std::size_t width_bits) noexcept {
  return width_bits == 128 || width_bits == 256;
}

KeyMaterial::KeyMaterial(std::vector<std::uint8_t> octets, DiscriminatorId id)
    : octets_(std::move(octets)), id_(id) {
  if (!is_supported_key_width(octets_.size() * 8)) {
    throw Error(ErrorCode::Unsupported,
                "key width " + std::to_string(octets_.size() * 8) +
                    " bits is not one of 128/256");
  }
}

KeyMaterial KeyMaterial::zeros(std::size_t width_bits, DiscriminatorId id) {
  if (width_bits % 8 != 0) {
    throw Error(ErrorCode::Unsupported, "key width must be a multiple of 8");
  }
  return KeyMaterial(std::vector<std::uint8_t>(width_bits / 8, 0), id);
}

KeyMaterial KeyMaterial::from_bits(std::span<const bool> bits, DiscriminatorId id) {
  if (bits.size() % 8 != 0) {
    throw Error(ErrorCode::Unsupported, "key width must be a multiple of 8");
  }
  std::vector<std::uint8_t> octets(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) octets[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return KeyMaterial(std::move(octets), id);
}

bool KeyMaterial::bit(std::size_t index) const {
  if (index >= width()) throw Error(ErrorCode::InvalidArgument, "bit index out of range");
  return (octets_[index / 8] >> (7 - index % 8)) & 1u;
}

KeyMaterial KeyMaterial::with_discriminator(DiscriminatorId id) const {
  return KeyMaterial(octets_, id);
}

std::strong_ordering operator<=>(const KeyMaterial& a, const KeyMaterial& b) noexcept {
  if (auto c = a.octets_.size() <=> b.octets_.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.octets_.begin(), a.octets_.end(),
                                                b.octets_.begin(), b.octets_.end());
}

namespace {

constexpr char kDigits[] = "0123456789abcdef";

int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string hex_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

std::vector<std::uint8_t> hex_decode(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (hex_value(text[i]) < 0) {
      throw Error(ErrorCode::InvalidInput,
                  "invalid hex character at offset " + std::to_string(i), i);
    }
  }
  if (text.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidInput, "odd number of hex digits", text.size());
  }
  std::vector<std::uint8_t> out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(hex_value(text[2 * i]) << 4 |
                                       hex_value(text[2 * i + 1]));
  }
  return out;
}

std::string to_hex(const KeyMaterial& key) { return hex_encode(key.octets()); }

KeyMaterial from_hex(std::string_view text, DiscriminatorId id) {
  // Charset first so the reported offset is the first bad character even when
  // the length is also wrong.
  auto octets = hex_decode(text);
  if (text.size() != 32 && text.size() != 64) {
    throw Error(ErrorCode::Unsupported,
                "key hex must be 32 or 64 characters, got " + std::to_string(text.size()));
  }
  return KeyMaterial(std::move(octets), id);
}

}  // namespace ekey
