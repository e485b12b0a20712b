#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ekey::seal {

inline constexpr std::size_t kAesBlock = 16;

// AES-CBC over OpenSSL EVP with a 16- or 32-octet key. With pkcs7 the
// plaintext is padded on encrypt and the padding checked and stripped on
// decrypt; without it the input must be block aligned.
std::vector<std::uint8_t> aes_cbc_encrypt(std::span<const std::uint8_t> key,
                                          std::span<const std::uint8_t> iv,
                                          std::span<const std::uint8_t> plaintext, bool pkcs7);
// Returns false when the PKCS7 padding is malformed.
bool aes_cbc_decrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> iv,
                     std::span<const std::uint8_t> ciphertext, bool pkcs7,
                     std::vector<std::uint8_t>& plaintext);

// Process-wide count of AES block operations performed by the two functions
// above. Gate-ordering tests assert that rejected keys leave it unchanged.
std::uint64_t aes_block_operations() noexcept;

}  // namespace ekey::seal
