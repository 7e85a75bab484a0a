#pragma once

#include <cstdint>
#include <random>

#include "tpmkey/bitstring.hpp"

namespace tpmkey::testing {

/// n bits from mt19937_64, each word consumed LSB first.
inline BitString prng_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BitString out;
  out.reserve(n);
  while (out.size() < n) {
    const auto word = rng();
    for (int i = 0; i < 64 && out.size() < n; ++i) out.push_back((word >> i) & 1u);
  }
  return out;
}

}  // namespace tpmkey::testing
