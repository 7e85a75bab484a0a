#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tpmkey {

enum class LearningRule { Hebbian, AntiHebbian, RandomWalk };
enum class Role { Sender, Recipient };

std::string_view to_string(LearningRule rule);
std::string_view to_string(Role role);
LearningRule parse_learning_rule(std::string_view name);
Role parse_role(std::string_view name);
Role opposite(Role role);

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape of a tree parity machine: K hidden units, N inputs per unit,
/// weights in [-L, L], inputs in {-M..-1, 1..M}.
struct TpmParams {
  int k = 3;
  int l = 8;
  int m = 1;
  int n = 60;
  LearningRule rule = LearningRule::Hebbian;
  // Inputs wider than the weight range weaken the machine; opt-in only.
  bool allow_m_above_l = false;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(n); }
  int alphabet_size() const { return 2 * l + 1; }

  friend bool operator==(const TpmParams&, const TpmParams&) = default;
};

/// Row-major K x N grid of integers. Base for weights and inputs.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, std::vector<int> values);
  Grid(int rows, int cols) : Grid(rows, cols, std::vector<int>(static_cast<std::size_t>(rows) * cols, 0)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  int at(int k, int n) const { return values_[index(k, n)]; }
  int& at(int k, int n) { return values_[index(k, n)]; }

  std::span<const int> row(int k) const {
    return {values_.data() + static_cast<std::size_t>(k) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<int> row(int k) {
    return {values_.data() + static_cast<std::size_t>(k) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const int> values() const { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int k, int n) const { return static_cast<std::size_t>(k) * cols_ + n; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> values_;
};

class WeightMatrix : public Grid {
 public:
  using Grid::Grid;
  /// Throws ParamError when the shape disagrees with `p` or any entry is outside [-L, L].
  void check(const TpmParams& p) const;
};

class InputVector : public Grid {
 public:
  using Grid::Grid;
  void check(const TpmParams& p) const;
};

/// y_k for each hidden unit, each -1 or +1.
using HiddenOutputs = std::vector<int>;

/// Uniform weights in [-L, L]; same seed, same matrix.
WeightMatrix init_tpm(const TpmParams& params, std::uint64_t seed);

/// Signum of each unit's local field. A zero field resolves to +1 for the
/// Sender and -1 for the Recipient.
HiddenOutputs hidden_outputs(const WeightMatrix& w, const InputVector& x, Role role);

int tpm_output(const HiddenOutputs& y);

/// Weight delta before clipping for one input under `rule`.
inline int learning_delta(LearningRule rule, int x, int o) {
  switch (rule) {
    case LearningRule::Hebbian: return o * x;
    case LearningRule::AntiHebbian: return -o * x;
    case LearningRule::RandomWalk: return x;
  }
  return 0;
}

/// Updates rows whose hidden output equals `o`, saturating at +/-L.
/// Callers only invoke this on rounds where both parties' outputs agreed.
void apply_update(WeightMatrix& w, const InputVector& x, const HiddenOutputs& y, int o,
                  LearningRule rule, int l);

}  // namespace tpmkey
