#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "core/key_material.hpp"
#include "core/random.hpp"

namespace ekey::seal {

enum class CipherSuite : std::uint8_t {
  AES128_CBC_PKCS7 = 1,
  AES256_CBC_PKCS7 = 2,
};

std::size_t suite_key_bits(CipherSuite suite) noexcept;
CipherSuite suite_for_width(std::size_t key_bits);
const char* suite_name(CipherSuite suite) noexcept;

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kHeaderSize = 47;  // magic .. key_check
inline constexpr std::size_t kMacSize = 32;

// Container layout (octet offsets; multi-octet integers would be big-endian,
// though version 1 has none):
//
//    0  magic "EKC1"           4
//    4  version (= 1)          1
//    5  suite                  1   1 = AES-128-CBC-PKCS7, 2 = AES-256-CBC-PKCS7
//    6  discriminator id       1   1 vt, 2 hash, 3 bdnn, 4 phash
//    7  salt                  16
//   23  iv                    16
//   39  key_check              8   SHA-256(salt || key)[0..8)
//   47  hmac                  32   HMAC-SHA-256(SHA-256("mac" || key), octets 0..47 || ciphertext)
//   79  ciphertext            16n, n >= 1
struct SealedContainer {
  std::uint8_t version = kContainerVersion;
  CipherSuite suite = CipherSuite::AES128_CBC_PKCS7;
  DiscriminatorId discriminator = DiscriminatorId::ValueTransfer;
  std::array<std::uint8_t, 16> salt{};
  std::array<std::uint8_t, 16> iv{};
  std::array<std::uint8_t, 8> key_check{};
  std::array<std::uint8_t, kMacSize> hmac{};
  std::vector<std::uint8_t> ciphertext;

  std::vector<std::uint8_t> header() const;
  std::vector<std::uint8_t> serialize() const;
  // Structural validation only; Error{Format} on any violation.
  static SealedContainer parse(std::span<const std::uint8_t> bytes);
};

// Encrypts the payload under the key with a fresh salt and IV from rng.
// The key width must match the suite (Error{InvalidInput} otherwise).
SealedContainer seal(std::span<const std::uint8_t> payload, const KeyMaterial& key,
                     CipherSuite suite, RandomSource& rng);
// Uses the platform CSPRNG.
SealedContainer seal(std::span<const std::uint8_t> payload, const KeyMaterial& key,
                     CipherSuite suite);

// The keyJudger gate: constant-time comparison of the salted truncated hash.
// A candidate of the wrong width is rejected without hashing.
bool key_check(const SealedContainer& container, const KeyMaterial& candidate);

// key_check, then HMAC verification, then decryption. Throws
// Error{KeyMismatch} (no AES work is done), Error{MacMismatch} or
// Error{PadCorrupt}; never returns partial plaintext.
std::vector<std::uint8_t> unseal(const SealedContainer& container, const KeyMaterial& candidate);

}  // namespace ekey::seal
