#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tpmkey {

/// Named message digest backed by OpenSSL ("sha256", "sha512", "sha3-256", ...).
class Hasher {
 public:
  explicit Hasher(std::string name = "sha256");

  const std::string& name() const { return name_; }
  std::size_t digest_bytes() const { return digest_bytes_; }
  std::size_t digest_bits() const { return digest_bytes_ * 8; }

  std::vector<std::uint8_t> digest(std::span<const std::uint8_t> data) const;

 private:
  std::string name_;
  std::size_t digest_bytes_ = 0;
};

}  // namespace tpmkey
