#include "exact/exact_discriminators.hpp"

#include <vector>

#include "core/error.hpp"

namespace ekey::exact {

namespace {

constexpr std::size_t kKeyOctets = 16;
constexpr std::size_t kMaxSsidOctets = 32;

}  // namespace

KeyMaterial derive_key_value_transfer(const ValueTransferInput& input) {
  const auto ssid = as_bytes(input.ssid);
  if (ssid.empty()) throw Error(ErrorCode::InvalidInput, "SSID must not be empty");
  if (ssid.size() > kMaxSsidOctets) {
    throw Error(ErrorCode::InvalidInput,
                "SSID is " + std::to_string(ssid.size() * 8) + " bits; at most 256 allowed");
  }
  if (ssid.size() > kKeyOctets) {
    auto d = md5(ssid);
    return KeyMaterial(std::vector<std::uint8_t>(d.begin(), d.end()),
                       DiscriminatorId::ValueTransfer);
  }
  // UTF-8 input always contributes whole octets, so the bit splice lands on an
  // octet boundary.
  std::vector<std::uint8_t> key(ssid.begin(), ssid.end());
  auto guid_digest = md5(as_bytes(input.guid));
  key.insert(key.end(), guid_digest.begin(),
             guid_digest.begin() + static_cast<std::ptrdiff_t>(kKeyOctets - ssid.size()));
  return KeyMaterial(std::move(key), DiscriminatorId::ValueTransfer);
}

bool is_sealable(HashAlgo algo) noexcept {
  return algo == HashAlgo::MD5 || algo == HashAlgo::SHA256;
}

std::vector<std::uint8_t> file_digest(std::span<const std::uint8_t> file_bytes, HashAlgo algo) {
  if (file_bytes.empty()) {
    throw Error(ErrorCode::InvalidInput, "target file is empty; zero-length files are rejected");
  }
  return digest(algo, file_bytes);
}

KeyMaterial derive_key_hash(std::span<const std::uint8_t> file_bytes, HashAlgo algo) {
  if (!is_sealable(algo)) {
    throw Error(ErrorCode::Unsupported,
                std::string(hash_algo_name(algo)) + " digests are " +
                    std::to_string(digest_bits(algo)) + " bits; keys must be 128 or 256 bits");
  }
  return KeyMaterial(file_digest(file_bytes, algo), DiscriminatorId::TypicalHash);
}

KeyMaterial ValueTransferDiscriminator::derive(const AttributeSample& sample) const {
  return derive_key_value_transfer({std::string(sample.as_text()), guid_});
}

std::string ValueTransferDiscriminator::describe() const {
  return "value-transfer(guid=" + guid_ + ")";
}

HashDiscriminator::HashDiscriminator(HashAlgo algo) : algo_(algo) {
  if (!is_sealable(algo)) {
    throw Error(ErrorCode::Unsupported,
                std::string(hash_algo_name(algo)) + " cannot back a key discriminator");
  }
}

KeyMaterial HashDiscriminator::derive(const AttributeSample& sample) const {
  return derive_key_hash(sample.bytes, algo_);
}

std::string HashDiscriminator::describe() const {
  return std::string("typical-hash(") + hash_algo_name(algo_) + ")";
}

}  // namespace ekey::exact
