#include "sealer/cipher.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <memory>

#include "core/error.hpp"

namespace ekey::seal {

namespace {

std::atomic<std::uint64_t> g_block_ops{0};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

const EVP_CIPHER* cipher_for(std::size_t key_len) {
  if (key_len == 16) return EVP_aes_128_cbc();
  if (key_len == 32) return EVP_aes_256_cbc();
  throw Error(ErrorCode::Unsupported, "AES key must be 16 or 32 octets");
}

CipherCtx make_ctx(std::span<const std::uint8_t> key, std::span<const std::uint8_t> iv,
                   bool encrypt, bool pkcs7) {
  if (iv.size() != kAesBlock) throw Error(ErrorCode::InvalidArgument, "AES-CBC IV must be 16 octets");
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx || EVP_CipherInit_ex(ctx.get(), cipher_for(key.size()), nullptr, key.data(), iv.data(),
                                encrypt ? 1 : 0) != 1) {
    throw Error(ErrorCode::Internal, "AES context initialisation failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), pkcs7 ? 1 : 0);
  return ctx;
}

}  // namespace

std::vector<std::uint8_t> aes_cbc_encrypt(std::span<const std::uint8_t> key,
                                          std::span<const std::uint8_t> iv,
                                          std::span<const std::uint8_t> plaintext, bool pkcs7) {
  if (!pkcs7 && plaintext.size() % kAesBlock != 0) {
    throw Error(ErrorCode::InvalidArgument, "unpadded AES-CBC input must be block aligned");
  }
  auto ctx = make_ctx(key, iv, true, pkcs7);
  std::vector<std::uint8_t> out(plaintext.size() + kAesBlock);
  int n1 = 0;
  int n2 = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &n1, plaintext.data(),
                       static_cast<int>(plaintext.size())) != 1 ||
      EVP_CipherFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) {
    throw Error(ErrorCode::Internal, "AES encryption failed");
  }
  out.resize(static_cast<std::size_t>(n1 + n2));
  g_block_ops.fetch_add(out.size() / kAesBlock, std::memory_order_relaxed);
  return out;
}

bool aes_cbc_decrypt(std::span<const std::uint8_t> key, std::span<const std::uint8_t> iv,
                     std::span<const std::uint8_t> ciphertext, bool pkcs7,
                     std::vector<std::uint8_t>& plaintext) {
  if (ciphertext.empty() || ciphertext.size() % kAesBlock != 0) {
    throw Error(ErrorCode::InvalidArgument, "AES-CBC ciphertext must be a positive block multiple");
  }
  auto ctx = make_ctx(key, iv, false, pkcs7);
  plaintext.assign(ciphertext.size() + kAesBlock, 0);
  int n1 = 0;
  int n2 = 0;
  g_block_ops.fetch_add(ciphertext.size() / kAesBlock, std::memory_order_relaxed);
  if (EVP_CipherUpdate(ctx.get(), plaintext.data(), &n1, ciphertext.data(),
                       static_cast<int>(ciphertext.size())) != 1) {
    throw Error(ErrorCode::Internal, "AES decryption failed");
  }
  if (EVP_CipherFinal_ex(ctx.get(), plaintext.data() + n1, &n2) != 1) {
    plaintext.clear();
    return false;
  }
  plaintext.resize(static_cast<std::size_t>(n1 + n2));
  return true;
}

std::uint64_t aes_block_operations() noexcept {
  return g_block_ops.load(std::memory_order_relaxed);
}

}  // namespace ekey::seal
