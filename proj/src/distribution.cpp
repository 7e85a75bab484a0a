#include "tpmkey/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpmkey {

FrequencyTable::FrequencyTable(int l) : l_(l) {
  if (l < 1) throw ParamError("L must be >= 1");
  counts_.assign(static_cast<std::size_t>(2 * l + 1), 0);
}

std::size_t FrequencyTable::slot(int value) const {
  if (value < -l_ || value > l_) throw ParamError("value outside [-L, L]");
  return static_cast<std::size_t>(value + l_);
}

void FrequencyTable::add(std::span<const int> values) {
  for (int v : values) {
    ++counts_[slot(v)];
  }
  total_ += values.size();
}

void FrequencyTable::merge(const FrequencyTable& other) {
  if (other.l_ != l_) throw ParamError("frequency tables over different ranges");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

Distribution::Distribution(const FrequencyTable& table) : l_(table.bound()) {
  if (table.total() == 0) throw std::invalid_argument("distribution of zero weights");
  probs_.reserve(table.counts().size());
  const double total = static_cast<double>(table.total());
  for (auto c : table.counts()) probs_.push_back(static_cast<double>(c) / total);
}

Distribution::Distribution(int l, std::vector<double> probs) : l_(l), probs_(std::move(probs)) {
  if (probs_.size() != static_cast<std::size_t>(2 * l + 1)) {
    throw ParamError("distribution needs 2L+1 entries");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (p < 0.0 || p > 1.0) throw ParamError("probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ParamError("probabilities do not sum to 1");
}

double Distribution::max_deviation_from_uniform() const {
  const double u = 1.0 / static_cast<double>(probs_.size());
  double worst = 0.0;
  for (double p : probs_) worst = std::max(worst, std::abs(p - u));
  return worst;
}

Distribution weight_distribution(std::span<const int> weights, int l) {
  if (weights.empty()) throw std::invalid_argument("weight_distribution: empty input");
  FrequencyTable table(l);
  table.add(weights);
  return Distribution(table);
}

double entropy(const Distribution& d) {
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double secret_length(const TpmParams& params, const Distribution& d) {
  return static_cast<double>(params.k) * params.n * entropy(d);
}

}  // namespace tpmkey
