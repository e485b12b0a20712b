#include "sealer/sealer.hpp"

#include <cstring>

#include "core/digest.hpp"
#include "core/error.hpp"
#include "sealer/cipher.hpp"

namespace ekey::seal {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'K', 'C', '1'};

std::array<std::uint8_t, 8> compute_key_check(std::span<const std::uint8_t> salt,
                                              const KeyMaterial& key) {
  std::vector<std::uint8_t> buf(salt.begin(), salt.end());
  buf.insert(buf.end(), key.octets().begin(), key.octets().end());
  const auto h = sha256(buf);
  std::array<std::uint8_t, 8> out{};
  std::memcpy(out.data(), h.data(), out.size());
  return out;
}

std::array<std::uint8_t, 32> mac_key(const KeyMaterial& key) {
  std::vector<std::uint8_t> buf = {'m', 'a', 'c'};
  buf.insert(buf.end(), key.octets().begin(), key.octets().end());
  return sha256(buf);
}

std::array<std::uint8_t, kMacSize> compute_mac(const SealedContainer& c, const KeyMaterial& key) {
  std::vector<std::uint8_t> data = c.header();
  data.insert(data.end(), c.ciphertext.begin(), c.ciphertext.end());
  return hmac_sha256(mac_key(key), data);
}

}  // namespace

std::size_t suite_key_bits(CipherSuite suite) noexcept {
  return suite == CipherSuite::AES256_CBC_PKCS7 ? 256 : 128;
}

CipherSuite suite_for_width(std::size_t key_bits) {
  if (key_bits == 128) return CipherSuite::AES128_CBC_PKCS7;
  if (key_bits == 256) return CipherSuite::AES256_CBC_PKCS7;
  throw Error(ErrorCode::Unsupported, "no cipher suite for " + std::to_string(key_bits) + "-bit keys");
}

const char* suite_name(CipherSuite suite) noexcept {
  return suite == CipherSuite::AES256_CBC_PKCS7 ? "AES-256-CBC-PKCS7" : "AES-128-CBC-PKCS7";
}

std::vector<std::uint8_t> SealedContainer::header() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(version);
  out.push_back(static_cast<std::uint8_t>(suite));
  out.push_back(static_cast<std::uint8_t>(discriminator));
  out.insert(out.end(), salt.begin(), salt.end());
  out.insert(out.end(), iv.begin(), iv.end());
  out.insert(out.end(), key_check.begin(), key_check.end());
  return out;
}

std::vector<std::uint8_t> SealedContainer::serialize() const {
  std::vector<std::uint8_t> out = header();
  out.insert(out.end(), hmac.begin(), hmac.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

SealedContainer SealedContainer::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize + kMacSize + kAesBlock) {
    throw Error(ErrorCode::Format, "sealed container too short (" + std::to_string(bytes.size()) +
                                       " octets)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::Format, "not a sealed container (bad magic)", 0);
  }
  SealedContainer c;
  c.version = bytes[4];
  if (c.version != kContainerVersion) {
    throw Error(ErrorCode::Format, "unsupported container version " + std::to_string(c.version), 4);
  }
  if (bytes[5] != 1 && bytes[5] != 2) throw Error(ErrorCode::Format, "unknown cipher suite", 5);
  c.suite = static_cast<CipherSuite>(bytes[5]);
  if (!is_valid_discriminator(bytes[6])) throw Error(ErrorCode::Format, "unknown discriminator id", 6);
  c.discriminator = static_cast<DiscriminatorId>(bytes[6]);
  std::memcpy(c.salt.data(), bytes.data() + 7, 16);
  std::memcpy(c.iv.data(), bytes.data() + 23, 16);
  std::memcpy(c.key_check.data(), bytes.data() + 39, 8);
  std::memcpy(c.hmac.data(), bytes.data() + kHeaderSize, kMacSize);
  c.ciphertext.assign(bytes.begin() + kHeaderSize + kMacSize, bytes.end());
  if (c.ciphertext.size() % kAesBlock != 0) {
    throw Error(ErrorCode::Format, "ciphertext is not a whole number of AES blocks",
                kHeaderSize + kMacSize);
  }
  return c;
}

SealedContainer seal(std::span<const std::uint8_t> payload, const KeyMaterial& key,
                     CipherSuite suite, RandomSource& rng) {
  if (key.width() != suite_key_bits(suite)) {
    throw Error(ErrorCode::InvalidInput, std::to_string(key.width()) + "-bit key cannot drive " +
                                             suite_name(suite));
  }
  SealedContainer c;
  c.suite = suite;
  c.discriminator = key.discriminator();
  rng.fill(c.salt);
  rng.fill(c.iv);
  c.key_check = compute_key_check(c.salt, key);
  c.ciphertext = aes_cbc_encrypt(key.octets(), c.iv, payload, true);
  c.hmac = compute_mac(c, key);
  return c;
}

SealedContainer seal(std::span<const std::uint8_t> payload, const KeyMaterial& key,
                     CipherSuite suite) {
  SystemRandom rng;
  return seal(payload, key, suite, rng);
}

bool key_check(const SealedContainer& container, const KeyMaterial& candidate) {
  if (candidate.width() != suite_key_bits(container.suite)) return false;
  return constant_time_equal(compute_key_check(container.salt, candidate), container.key_check);
}

std::vector<std::uint8_t> unseal(const SealedContainer& container, const KeyMaterial& candidate) {
  if (!key_check(container, candidate)) {
    throw Error(ErrorCode::KeyMismatch, "candidate key rejected by key check");
  }
  if (!constant_time_equal(compute_mac(container, candidate), container.hmac)) {
    throw Error(ErrorCode::MacMismatch, "container authentication failed (tampered or corrupt)");
  }
  std::vector<std::uint8_t> plain;
  if (!aes_cbc_decrypt(candidate.octets(), container.iv, container.ciphertext, true, plain)) {
    throw Error(ErrorCode::PadCorrupt, "PKCS7 padding invalid after successful authentication");
  }
  return plain;
}

}  // namespace ekey::seal
