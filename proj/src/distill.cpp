#include "tpmkey/distill.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace tpmkey {

std::string_view to_string(EncodingMode mode) {
  return mode == EncodingMode::Full ? "full" : "zero-removed";
}

EncodingMode parse_encoding_mode(std::string_view name) {
  if (name == "full") return EncodingMode::Full;
  if (name == "zero-removed") return EncodingMode::ZeroRemoved;
  throw std::invalid_argument("unknown encoding mode: " + std::string(name));
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void check_range(std::span<const int> weights, int l) {
  if (l < 1) throw ParamError("L must be >= 1");
  for (int v : weights) {
    if (v < -l || v > l) throw ParamError("weight outside [-L, L]");
  }
}

void check_length(std::span<const int> weights, const TpmParams& params) {
  if (weights.size() != params.size()) throw ParamError("weight sequence length != K*N");
}

}  // namespace

DistillConfig DistillConfig::parse(std::istream& in) {
  DistillConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "hash") {
      cfg.hash = value;
    } else if (key == "encoding") {
      cfg.encoding = parse_encoding_mode(value);
    } else {
      throw std::invalid_argument("unknown distill config key: " + key);
    }
  }
  return cfg;
}

DistillConfig DistillConfig::parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

std::string DistillConfig::serialize() const {
  std::ostringstream out;
  out << "hash = " << hash << "\n"
      << "encoding = " << to_string(encoding) << "\n";
  return out.str();
}

int full_width(int l) {
  return static_cast<int>(std::bit_width(static_cast<unsigned>(2 * l)));
}

WeightSequence equalize(std::span<const int> weights, int l) {
  check_range(weights, l);
  std::vector<std::uint64_t> freq(static_cast<std::size_t>(2 * l + 1), 0);
  WeightSequence out(weights.begin(), weights.end());
  for (int& w : out) {
    const auto [lo, hi] = std::minmax_element(freq.begin(), freq.end());
    if (freq[static_cast<std::size_t>(w + l)] == *hi) {
      // min_element returns the first minimum, i.e. the smallest value.
      w = static_cast<int>(lo - freq.begin()) - l;
    }
    ++freq[static_cast<std::size_t>(w + l)];
  }
  return out;
}

WeightSequence equalize(std::span<const int> weights, const TpmParams& params) {
  check_length(weights, params);
  return equalize(weights, params.l);
}

WeightSequence dropout(std::span<const int> equalized, double entropy_bits, int l) {
  if (!(entropy_bits >= 0.0)) throw std::invalid_argument("dropout: negative entropy");
  check_range(equalized, l);
  const double width = std::log2(static_cast<double>(2 * l + 1));
  WeightSequence kept;
  double len_current = 0.0;
  for (std::size_t i = 0; i < equalized.size(); ++i) {
    const double budget = static_cast<double>(i + 1) * entropy_bits;
    if (len_current < budget) {
      kept.push_back(equalized[i]);
      len_current += width;
    }
  }
  return kept;
}

WeightSequence dropout(std::span<const int> equalized, double entropy_bits, const TpmParams& params) {
  check_length(equalized, params);
  return dropout(equalized, entropy_bits, params.l);
}

BitString encode_bits(std::span<const int> weights, int l, EncodingMode mode) {
  check_range(weights, l);
  BitString out;
  if (mode == EncodingMode::Full) {
    const int width = full_width(l);
    out.reserve(weights.size() * static_cast<std::size_t>(width));
    for (int v : weights) out.append_lsb_first(static_cast<std::uint64_t>(v + l), width);
    return out;
  }
  const auto symbols = static_cast<unsigned>(2 * l);
  if (!std::has_single_bit(symbols)) {
    throw ParamError("zero-removed encoding needs 2L to be a power of two");
  }
  const int width = std::countr_zero(symbols);
  out.reserve(weights.size() * static_cast<std::size_t>(width));
  for (int v : weights) {
    if (v == 0) continue;
    const int index = v < 0 ? v + l : v + l - 1;
    out.append_lsb_first(static_cast<std::uint64_t>(index), width);
  }
  return out;
}

BitString substitute(const BitString& bits, const Hasher& hash) {
  const std::size_t block = hash.digest_bits();
  const std::size_t blocks = bits.size() / block;
  BitString out;
  out.reserve(blocks * block);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto bytes = bits.slice(b * block, block).to_bytes();
    out.append(BitString::from_bytes(hash.digest(bytes)));
  }
  return out;
}

DistillTrace distill_trace(const WeightMatrix& final_weights, const TpmParams& params,
                           const DistillConfig& cfg) {
  final_weights.check(params);
  if (cfg.encoding != EncodingMode::Full) {
    // Zero removal is for the baseline stream only.
    throw std::invalid_argument("distill: only full encoding is valid inside the pipeline");
  }
  const auto flat = final_weights.values();
  DistillTrace trace;
  trace.pre_entropy = entropy(weight_distribution(flat, params.l));
  trace.equalized = equalize(flat, params);
  trace.kept = dropout(trace.equalized, trace.pre_entropy, params);
  trace.encoded = encode_bits(trace.kept, params.l, cfg.encoding);
  trace.secret = substitute(trace.encoded, Hasher(cfg.hash));
  return trace;
}

BitString distill(const WeightMatrix& final_weights, const TpmParams& params, const DistillConfig& cfg) {
  return distill_trace(final_weights, params, cfg).secret;
}

std::vector<std::uint8_t> weight_digest(const WeightMatrix& w, int l, const Hasher& hash) {
  return hash.digest(encode_bits(w.values(), l, EncodingMode::Full).to_bytes());
}

}  // namespace tpmkey
