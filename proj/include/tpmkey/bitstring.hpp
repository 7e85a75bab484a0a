#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpmkey {

/// Exact-length sequence of bits, one byte per bit (values 0 or 1).
///
/// Packing to bytes is least-significant-bit first: bit i lands in byte
/// i / 8 at position i % 8. A trailing partial byte is zero-padded, so
/// round-tripping through bytes needs the bit length alongside.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::vector<std::uint8_t> bits);

  static BitString from_string(std::string_view text);  // "0110..."; whitespace ignored
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count);
  static BitString from_bytes(std::span<const std::uint8_t> bytes) {
    return from_bytes(bytes, bytes.size() * 8);
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  void push_back(bool bit) { bits_.push_back(bit ? 1 : 0); }
  /// Appends the low `width` bits of `value`, LSB first.
  void append_lsb_first(std::uint64_t value, int width);
  void append(const BitString& other);
  void reserve(std::size_t n) { bits_.reserve(n); }

  BitString slice(std::size_t offset, std::size_t count) const;
  BitString complement() const;
  std::size_t count_ones() const;

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_string() const;
  /// Lowercase hex of to_bytes().
  std::string to_hex() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace tpmkey
