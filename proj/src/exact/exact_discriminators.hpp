#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "core/digest.hpp"
#include "core/discriminator.hpp"
#include "core/key_material.hpp"

namespace ekey::exact {

// SSID and GUID as UTF-8 text. The SSID must be 1..32 octets (0 < bits <= 256).
struct ValueTransferInput {
  std::string ssid;
  std::string guid;
};

// Splices the SSID bits with a GUID-derived remainder into a 128-bit key:
//   len(ssid) <= 128 bits: ssid_bits || first (128 - len) bits of MD5(guid)
//   len(ssid) >  128 bits: MD5(ssid)
KeyMaterial derive_key_value_transfer(const ValueTransferInput& input);

// key = algo(file_bytes). Only MD5 (128) and SHA256 (256) produce sealable
// keys; SHA1 and SHA512 raise Error{Unsupported}. Use digest() for those.
KeyMaterial derive_key_hash(std::span<const std::uint8_t> file_bytes, HashAlgo algo);

// The raw digest for any of the four algorithms, with the same empty-input
// rejection as derive_key_hash.
std::vector<std::uint8_t> file_digest(std::span<const std::uint8_t> file_bytes, HashAlgo algo);

bool is_sealable(HashAlgo algo) noexcept;

// Text samples are SSIDs; the GUID is fixed per discriminator instance, as it
// is per host.
class ValueTransferDiscriminator final : public Discriminator {
 public:
  explicit ValueTransferDiscriminator(std::string guid) : guid_(std::move(guid)) {}

  DiscriminatorId id() const noexcept override { return DiscriminatorId::ValueTransfer; }
  std::size_t key_width() const noexcept override { return 128; }
  SampleKind input_kind() const noexcept override { return SampleKind::Text; }
  KeyMaterial derive(const AttributeSample& sample) const override;
  std::string describe() const override;

 private:
  std::string guid_;
};

class HashDiscriminator final : public Discriminator {
 public:
  explicit HashDiscriminator(HashAlgo algo);

  DiscriminatorId id() const noexcept override { return DiscriminatorId::TypicalHash; }
  std::size_t key_width() const noexcept override { return digest_bits(algo_); }
  SampleKind input_kind() const noexcept override { return SampleKind::File; }
  KeyMaterial derive(const AttributeSample& sample) const override;
  std::string describe() const override;

  HashAlgo algo() const noexcept { return algo_; }

 private:
  HashAlgo algo_;
};

}  // namespace ekey::exact
