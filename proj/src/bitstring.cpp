#include "tpmkey/bitstring.hpp"

#include <cctype>
#include <stdexcept>

namespace tpmkey {

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw std::invalid_argument("BitString: element is not 0 or 1");
  }
}

BitString BitString::from_string(std::string_view text) {
  BitString out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '0' || c == '1') {
      out.push_back(c == '1');
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("BitString: unexpected character in bit text");
    }
  }
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  if (bit_count > bytes.size() * 8) throw std::invalid_argument("BitString: bit count exceeds bytes");
  BitString out;
  out.bits_.resize(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) out.bits_[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return out;
}

void BitString::append_lsb_first(std::uint64_t value, int width) {
  for (int i = 0; i < width; ++i) bits_.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
}

void BitString::append(const BitString& other) {
  bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitString BitString::slice(std::size_t offset, std::size_t count) const {
  if (offset > bits_.size() || count > bits_.size() - offset) {
    throw std::out_of_range("BitString::slice");
  }
  BitString out;
  out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(offset),
                   bits_.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return out;
}

BitString BitString::complement() const {
  BitString out = *this;
  for (auto& b : out.bits_) b ^= 1u;
  return out;
}

std::size_t BitString::count_ones() const {
  std::size_t ones = 0;
  for (auto b : bits_) ones += b;
  return ones;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    out[i / 8] |= static_cast<std::uint8_t>(bits_[i] << (i % 8));
  }
  return out;
}

std::string BitString::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
  return s;
}

std::string BitString::to_hex() const { return tpmkey::to_hex(to_bytes()); }

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0x0f]);
  }
  return s;
}

}  // namespace tpmkey
