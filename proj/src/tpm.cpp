#include "tpmkey/tpm.hpp"

#include <algorithm>
#include <random>

namespace tpmkey {

std::string_view to_string(LearningRule rule) {
  switch (rule) {
    case LearningRule::Hebbian: return "hebbian";
    case LearningRule::AntiHebbian: return "anti-hebbian";
    case LearningRule::RandomWalk: return "random-walk";
  }
  return "?";
}

std::string_view to_string(Role role) { return role == Role::Sender ? "sender" : "recipient"; }

LearningRule parse_learning_rule(std::string_view name) {
  if (name == "hebbian") return LearningRule::Hebbian;
  if (name == "anti-hebbian" || name == "antihebbian") return LearningRule::AntiHebbian;
  if (name == "random-walk" || name == "randomwalk") return LearningRule::RandomWalk;
  throw ParamError("unknown learning rule: " + std::string(name));
}

Role parse_role(std::string_view name) {
  if (name == "sender") return Role::Sender;
  if (name == "recipient") return Role::Recipient;
  throw ParamError("unknown role: " + std::string(name));
}

Role opposite(Role role) { return role == Role::Sender ? Role::Recipient : Role::Sender; }

void TpmParams::validate() const {
  if (k < 1 || n < 1 || l < 1 || m < 1) {
    throw ParamError("K, L, M and N must all be >= 1");
  }
  if (m > l && !allow_m_above_l) {
    throw ParamError("M > L rejected (input bound exceeds weight bound)");
  }
}

Grid::Grid(int rows, int cols, std::vector<int> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0 || values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw ParamError("grid shape does not match value count");
  }
}

void WeightMatrix::check(const TpmParams& p) const {
  if (rows() != p.k || cols() != p.n) throw ParamError("weight matrix shape mismatch");
  for (int v : values()) {
    if (v < -p.l || v > p.l) throw ParamError("weight outside [-L, L]");
  }
}

void InputVector::check(const TpmParams& p) const {
  if (rows() != p.k || cols() != p.n) throw ParamError("input vector shape mismatch");
  for (int v : values()) {
    if (v == 0 || v < -p.m || v > p.m) throw ParamError("input outside {-M..-1, 1..M}");
  }
}

WeightMatrix init_tpm(const TpmParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(-params.l, params.l);
  std::vector<int> values(params.size());
  for (auto& v : values) v = dist(rng);
  return WeightMatrix(params.k, params.n, std::move(values));
}

HiddenOutputs hidden_outputs(const WeightMatrix& w, const InputVector& x, Role role) {
  if (w.rows() != x.rows() || w.cols() != x.cols()) {
    throw ParamError("weight/input shape mismatch");
  }
  const int tie = role == Role::Sender ? 1 : -1;
  HiddenOutputs y(static_cast<std::size_t>(w.rows()));
  for (int k = 0; k < w.rows(); ++k) {
    auto wr = w.row(k);
    auto xr = x.row(k);
    long field = 0;
    for (std::size_t n = 0; n < wr.size(); ++n) field += static_cast<long>(wr[n]) * xr[n];
    y[k] = field > 0 ? 1 : (field < 0 ? -1 : tie);
  }
  return y;
}

int tpm_output(const HiddenOutputs& y) {
  int o = 1;
  for (int v : y) o *= v;
  return o;
}

void apply_update(WeightMatrix& w, const InputVector& x, const HiddenOutputs& y, int o,
                  LearningRule rule, int l) {
  if (w.rows() != x.rows() || w.cols() != x.cols() || y.size() != static_cast<std::size_t>(w.rows())) {
    throw ParamError("weight/input/hidden shape mismatch");
  }
  for (int k = 0; k < w.rows(); ++k) {
    if (y[k] != o) continue;
    auto wr = w.row(k);
    auto xr = x.row(k);
    for (std::size_t n = 0; n < wr.size(); ++n) {
      wr[n] = std::clamp(wr[n] + learning_delta(rule, xr[n], o), -l, l);
    }
  }
}

}  // namespace tpmkey
