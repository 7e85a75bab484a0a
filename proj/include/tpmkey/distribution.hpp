#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpmkey/tpm.hpp"

namespace tpmkey {

/// Occurrence counts for every value in [-L, L].
class FrequencyTable {
 public:
  explicit FrequencyTable(int l);

  int bound() const { return l_; }
  std::uint64_t count(int value) const { return counts_[slot(value)]; }
  void add(int value, std::uint64_t times = 1) { counts_[slot(value)] += times; }
  void add(std::span<const int> values);
  void merge(const FrequencyTable& other);
  std::uint64_t total() const { return total_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

 private:
  std::size_t slot(int value) const;

  int l_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Empirical frequency p_l of every value in [-L, L].
class Distribution {
 public:
  explicit Distribution(const FrequencyTable& table);
  Distribution(int l, std::vector<double> probs);

  int bound() const { return l_; }
  double p(int value) const { return probs_.at(static_cast<std::size_t>(value + l_)); }
  std::span<const double> probs() const { return probs_; }
  double extrema_mass() const { return p(-l_) + p(l_); }
  double max_deviation_from_uniform() const;

 private:
  int l_;
  std::vector<double> probs_;
};

Distribution weight_distribution(std::span<const int> weights, int l);
inline Distribution weight_distribution(const WeightMatrix& w, int l) {
  return weight_distribution(w.values(), l);
}

/// Shannon entropy in bits per weight, 0 log 0 = 0.
double entropy(const Distribution& d);

/// K * N * entropy(d).
double secret_length(const TpmParams& params, const Distribution& d);

}  // namespace tpmkey
