#include "tpmkey/hash.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace tpmkey {

namespace {

const EVP_MD* lookup(const std::string& name) {
  const EVP_MD* md = EVP_get_digestbyname(name.c_str());
  if (md == nullptr) throw std::invalid_argument("unknown hash function: " + name);
  return md;
}

}  // namespace

Hasher::Hasher(std::string name) : name_(std::move(name)) {
  const EVP_MD* md = lookup(name_);
  const int size = EVP_MD_size(md);
  if ((EVP_MD_flags(md) & EVP_MD_FLAG_XOF) != 0 || size <= 0) {
    throw std::invalid_argument("hash has no fixed output length: " + name_);
  }
  digest_bytes_ = static_cast<std::size_t>(size);
}

std::vector<std::uint8_t> Hasher::digest(std::span<const std::uint8_t> data) const {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  std::vector<std::uint8_t> out(digest_bytes_);
  unsigned int len = 0;
  if (EVP_DigestInit_ex(ctx.get(), lookup(name_), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
    throw std::runtime_error("digest computation failed: " + name_);
  }
  out.resize(len);
  return out;
}

}  // namespace tpmkey
