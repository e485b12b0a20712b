#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ekey {

enum class HashAlgo : std::uint8_t { MD5 = 1, SHA1 = 2, SHA256 = 3, SHA512 = 4 };

std::size_t digest_bits(HashAlgo algo) noexcept;
const char* hash_algo_name(HashAlgo algo) noexcept;
HashAlgo parse_hash_algo(std::string_view name);

std::vector<std::uint8_t> digest(HashAlgo algo, std::span<const std::uint8_t> data);

std::array<std::uint8_t, 16> md5(std::span<const std::uint8_t> data);
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);
std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> data);

// Constant-time equality for equal-length buffers; false on length mismatch.
bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace ekey
