#include "core/digest.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cctype>
#include <memory>
#include <string>

#include "core/error.hpp"

namespace ekey {

std::size_t digest_bits(HashAlgo algo) noexcept {
  switch (algo) {
    case HashAlgo::MD5: return 128;
    case HashAlgo::SHA1: return 160;
    case HashAlgo::SHA256: return 256;
    case HashAlgo::SHA512: return 512;
  }
  return 0;
}

const char* hash_algo_name(HashAlgo algo) noexcept {
  switch (algo) {
    case HashAlgo::MD5: return "md5";
    case HashAlgo::SHA1: return "sha1";
    case HashAlgo::SHA256: return "sha256";
    case HashAlgo::SHA512: return "sha512";
  }
  return "?";
}

HashAlgo parse_hash_algo(std::string_view text) {
  std::string name(text);
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name == "md5") return HashAlgo::MD5;
  if (name == "sha1") return HashAlgo::SHA1;
  if (name == "sha256") return HashAlgo::SHA256;
  if (name == "sha512") return HashAlgo::SHA512;
  throw Error(ErrorCode::InvalidArgument, "unknown hash algorithm '" + std::string(text) + "'");
}

namespace {

const EVP_MD* evp_for(HashAlgo algo) {
  switch (algo) {
    case HashAlgo::MD5: return EVP_md5();
    case HashAlgo::SHA1: return EVP_sha1();
    case HashAlgo::SHA256: return EVP_sha256();
    case HashAlgo::SHA512: return EVP_sha512();
  }
  throw Error(ErrorCode::InvalidArgument, "unknown hash algorithm");
}

}  // namespace

std::vector<std::uint8_t> digest(HashAlgo algo, std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, evp_for(algo), nullptr) != 1) {
    throw Error(ErrorCode::Internal, "digest computation failed");
  }
  out.resize(len);
  return out;
}

std::array<std::uint8_t, 16> md5(std::span<const std::uint8_t> data) {
  auto d = digest(HashAlgo::MD5, data);
  std::array<std::uint8_t, 16> out{};
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  auto d = digest(HashAlgo::SHA256, data);
  std::array<std::uint8_t, 32> out{};
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr ||
      len != out.size()) {
    throw Error(ErrorCode::Internal, "HMAC computation failed");
  }
  return out;
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace ekey
