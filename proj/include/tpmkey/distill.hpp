#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tpmkey/bitstring.hpp"
#include "tpmkey/distribution.hpp"
#include "tpmkey/hash.hpp"
#include "tpmkey/tpm.hpp"

namespace tpmkey {

/// Flat weights, row-major (k outer, n inner).
using WeightSequence = std::vector<int>;

enum class EncodingMode {
  Full,         // index v+L, ceil(log2(2L+1)) bits per weight
  ZeroRemoved,  // zeros deleted, remaining 2L values packed in log2(2L) bits
};

std::string_view to_string(EncodingMode mode);
EncodingMode parse_encoding_mode(std::string_view name);

struct DistillConfig {
  std::string hash = "sha256";
  EncodingMode encoding = EncodingMode::Full;

  /// Plain `key = value` lines; '#' starts a comment. Keys: hash, encoding.
  static DistillConfig parse(std::istream& in);
  static DistillConfig parse(const std::string& text);
  std::string serialize() const;

  friend bool operator==(const DistillConfig&, const DistillConfig&) = default;
};

/// Bits needed per weight in Full mode.
int full_width(int l);

/// One in-order pass: a weight that is currently among the most frequent
/// values seen so far is replaced by the smallest of the least frequent
/// values; the (possibly replaced) value is then counted.
WeightSequence equalize(std::span<const int> weights, int l);
WeightSequence equalize(std::span<const int> weights, const TpmParams& params);

/// Keeps the weight at 1-based position p iff the running length is below
/// p * entropy_bits; every kept weight adds log2(2L+1) to the running length.
/// `entropy_bits` must come from the weights before equalization.
WeightSequence dropout(std::span<const int> equalized, double entropy_bits, int l);
WeightSequence dropout(std::span<const int> equalized, double entropy_bits, const TpmParams& params);

/// Weight indices emitted LSB first, weights concatenated in order.
BitString encode_bits(std::span<const int> weights, int l, EncodingMode mode);

/// Replaces every full block of hash-width bits by its digest; a trailing
/// short block is dropped.
BitString substitute(const BitString& bits, const Hasher& hash);

struct DistillTrace {
  double pre_entropy = 0.0;  // bits per weight, before equalization
  WeightSequence equalized;
  WeightSequence kept;       // after dropout
  BitString encoded;         // pre-substitution stream
  BitString secret;
};

DistillTrace distill_trace(const WeightMatrix& final_weights, const TpmParams& params,
                           const DistillConfig& cfg = {});
BitString distill(const WeightMatrix& final_weights, const TpmParams& params,
                  const DistillConfig& cfg = {});

/// Digest of the packed Full-mode encoding; what peers compare to detect sync.
std::vector<std::uint8_t> weight_digest(const WeightMatrix& w, int l, const Hasher& hash);

}  // namespace tpmkey
