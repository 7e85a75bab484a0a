#pragma once

// Independent re-implementations used as test oracles.

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "tpmkey/distill.hpp"

namespace tpmkey::testing {

// Literal transcription of the equalization pseudocode with explicit index sets.
inline WeightSequence equalize_oracle(const WeightSequence& w, int l) {
  std::vector<long> f(static_cast<std::size_t>(2 * l + 1), 0);
  WeightSequence out;
  for (int v : w) {
    const long hi = *std::max_element(f.begin(), f.end());
    const long lo = *std::min_element(f.begin(), f.end());
    std::set<int> argmax;
    std::set<int> argmin;
    for (int value = -l; value <= l; ++value) {
      const long c = f[static_cast<std::size_t>(value + l)];
      if (c == hi) argmax.insert(value);
      if (c == lo) argmin.insert(value);
    }
    const int chosen = argmax.count(v) ? *argmin.begin() : v;
    ++f[static_cast<std::size_t>(chosen + l)];
    out.push_back(chosen);
  }
  return out;
}

// Test-only inverse of the Full encoding.
inline WeightSequence decode_full(const BitString& bits, int l) {
  const auto width = static_cast<std::size_t>(full_width(l));
  if (bits.size() % width != 0) throw std::invalid_argument("decode_full: ragged bit count");
  WeightSequence out;
  for (std::size_t i = 0; i < bits.size(); i += width) {
    int index = 0;
    for (std::size_t b = 0; b < width; ++b) index |= bits[i + b] << b;
    out.push_back(index - l);
  }
  return out;
}

}  // namespace tpmkey::testing
