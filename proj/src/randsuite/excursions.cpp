// Random excursion tests over the +/-1 random walk.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "common.hpp"

namespace tpmkey::randsuite {

namespace {

struct Walk {
  std::vector<long> partial_sums;
  std::size_t cycles = 0;
};

Walk build_walk(const BitString& bits) {
  Walk w;
  w.partial_sums.resize(bits.size());
  long s = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    s += bits[i] ? 1 : -1;
    w.partial_sums[i] = s;
    w.cycles += s == 0;
  }
  // A walk that does not return to zero at the end closes one more cycle.
  if (s != 0) ++w.cycles;
  return w;
}

std::size_t cycle_constraint(std::size_t n) {
  return static_cast<std::size_t>(std::max(0.005 * std::sqrt(static_cast<double>(n)), 500.0));
}

/// Probability that a cycle visits state x exactly k times (k = 5 means >= 5).
double visit_probability(int x, int k) {
  const double ax = std::abs(x);
  const double leave = 1.0 / (2.0 * ax);
  if (k == 0) return 1.0 - leave;
  if (k < 5) return std::pow(1.0 - leave, k - 1) / (4.0 * ax * ax);
  return leave * std::pow(1.0 - leave, 4);
}

std::string state_label(int x) { return "x=" + std::to_string(x); }

}  // namespace

TestResult random_excursions(const BitString& bits) {
  const Walk w = build_walk(bits);
  if (w.cycles == 0) return detail::not_applicable(TestId::RandomExcursions, "no cycles");
  constexpr int kStates[] = {-4, -3, -2, -1, 1, 2, 3, 4};

  // nu[state][k]: number of cycles visiting the state exactly k times.
  std::vector<std::vector<double>> nu(8, std::vector<double>(6, 0.0));
  std::array<int, 9> visits{};  // index x + 4
  auto close_cycle = [&]() {
    for (std::size_t s = 0; s < 8; ++s) {
      const int v = visits[static_cast<std::size_t>(kStates[s] + 4)];
      nu[s][static_cast<std::size_t>(std::min(v, 5))] += 1.0;
    }
    visits.fill(0);
  };
  for (long s : w.partial_sums) {
    if (s == 0) {
      close_cycle();
    } else if (s >= -4 && s <= 4) {
      ++visits[static_cast<std::size_t>(s + 4)];
    }
  }
  if (w.partial_sums.back() != 0) close_cycle();

  const double j = static_cast<double>(w.cycles);
  std::vector<double> p;
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < 8; ++s) {
    std::vector<double> probs(6);
    for (int k = 0; k < 6; ++k) probs[static_cast<std::size_t>(k)] = visit_probability(kStates[s], k);
    const double chi2 = detail::chi_square(nu[s], probs, j);
    p.push_back(detail::igamc(2.5, chi2 / 2.0));
    labels.push_back(state_label(kStates[s]));
  }
  auto r = detail::computed(TestId::RandomExcursions, std::move(p), std::move(labels));
  r.below_recommended = w.cycles < cycle_constraint(bits.size());
  r.note = "cycles=" + std::to_string(w.cycles);
  return r;
}

TestResult random_excursions_variant(const BitString& bits) {
  const Walk w = build_walk(bits);
  if (w.cycles == 0) return detail::not_applicable(TestId::RandomExcursionsVariant, "no cycles");
  std::array<double, 19> visits{};  // index x + 9
  for (long s : w.partial_sums) {
    if (s >= -9 && s <= 9) visits[static_cast<std::size_t>(s + 9)] += 1.0;
  }
  const double j = static_cast<double>(w.cycles);
  std::vector<double> p;
  std::vector<std::string> labels;
  for (int x = -9; x <= 9; ++x) {
    if (x == 0) continue;
    const double xi = visits[static_cast<std::size_t>(x + 9)];
    const double denom = std::sqrt(2.0 * j * (4.0 * std::abs(x) - 2.0));
    p.push_back(std::erfc(std::abs(xi - j) / denom));
    labels.push_back(state_label(x));
  }
  auto r = detail::computed(TestId::RandomExcursionsVariant, std::move(p), std::move(labels));
  r.below_recommended = w.cycles < cycle_constraint(bits.size());
  r.note = "cycles=" + std::to_string(w.cycles);
  return r;
}

}  // namespace tpmkey::randsuite
