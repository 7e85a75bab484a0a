// Pattern-statistics tests: Maurer's universal, serial, approximate entropy.

#include <array>
#include <cmath>
#include <stdexcept>

#include "common.hpp"

namespace tpmkey::randsuite {

using detail::computed;
using detail::igamc;
using detail::not_applicable;

namespace {

struct UniversalConstants {
  double expected;
  double variance;
};

// Indexed by block length L = 1..16.
constexpr std::array<UniversalConstants, 17> kUniversal = {{
    {0.0, 0.0},
    {0.7326495, 0.690},
    {1.5374383, 1.338},
    {2.4016068, 1.901},
    {3.3112247, 2.358},
    {4.2534266, 2.705},
    {5.2177052, 2.954},
    {6.1962507, 3.125},
    {7.1836656, 3.238},
    {8.1764248, 3.311},
    {9.1723243, 3.356},
    {10.170032, 3.384},
    {11.168765, 3.401},
    {12.168070, 3.410},
    {13.167693, 3.416},
    {14.167488, 3.419},
    {15.167379, 3.421},
}};

// Smallest n for each L from 6 upward.
constexpr std::array<std::size_t, 11> kUniversalThresholds = {
    387840, 904960, 2068480, 4654080, 10342400, 22753280, 49643520, 107560960, 231669760, 496435200, 1059061760};

int universal_block_length(std::size_t n) {
  int l = 0;
  for (std::size_t i = 0; i < kUniversalThresholds.size(); ++i) {
    if (n >= kUniversalThresholds[i]) l = 6 + static_cast<int>(i);
  }
  return l;
}

}  // namespace

TestResult maurer_universal(const BitString& bits, int block_length, int init_blocks) {
  if (block_length < 1 || block_length > 16 || init_blocks < 1) {
    throw std::invalid_argument("maurer_universal: L must be in [1, 16] and Q >= 1");
  }
  const auto l = static_cast<std::size_t>(block_length);
  const auto q = static_cast<std::size_t>(init_blocks);
  const std::size_t total_blocks = bits.size() / l;
  if (total_blocks <= q) return not_applicable(TestId::MaurerUniversal, "no test blocks after initialization");
  const std::size_t k = total_blocks - q;

  auto block_value = [&](std::size_t block) {
    std::size_t v = 0;
    for (std::size_t j = 0; j < l; ++j) v = (v << 1) | bits[block * l + j];
    return v;
  };

  std::vector<std::size_t> last_seen(std::size_t{1} << l, 0);
  for (std::size_t i = 1; i <= q; ++i) last_seen[block_value(i - 1)] = i;
  double sum = 0.0;
  for (std::size_t i = q + 1; i <= q + k; ++i) {
    const auto v = block_value(i - 1);
    sum += std::log2(static_cast<double>(i - last_seen[v]));
    last_seen[v] = i;
  }
  const double fn = sum / static_cast<double>(k);
  const double dl = static_cast<double>(l);
  const double dk = static_cast<double>(k);
  const double c = 0.7 - 0.8 / dl + (4.0 + 32.0 / dl) * std::pow(dk, -3.0 / dl) / 15.0;
  const double sigma = c * std::sqrt(kUniversal[l].variance / dk);
  const double p = std::erfc(std::abs(fn - kUniversal[l].expected) / (std::sqrt(2.0) * sigma));
  auto r = computed(TestId::MaurerUniversal, {p});
  r.statistic = fn;
  r.below_recommended = block_length < 6 || q < 10 * (std::size_t{1} << l);
  return r;
}

TestResult maurer_universal(const BitString& bits) {
  const int l = universal_block_length(bits.size());
  if (l == 0) return not_applicable(TestId::MaurerUniversal, "needs at least 387840 bits");
  return maurer_universal(bits, l, 10 * (1 << l));
}

namespace {

/// Counts of every overlapping m-bit pattern, the sequence wrapping around.
std::vector<std::uint64_t> pattern_counts(const BitString& bits, int m) {
  const std::size_t n = bits.size();
  const std::size_t mask = (std::size_t{1} << m) - 1;
  std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
  std::size_t window = 0;
  for (int j = 0; j < m - 1; ++j) window = (window << 1) | bits[static_cast<std::size_t>(j) % n];
  for (std::size_t i = 0; i < n; ++i) {
    window = ((window << 1) | bits[(i + static_cast<std::size_t>(m) - 1) % n]) & mask;
    ++counts[window];
  }
  return counts;
}

double psi_squared(const BitString& bits, int m) {
  if (m <= 0) return 0.0;
  double sum = 0.0;
  for (auto c : pattern_counts(bits, m)) sum += static_cast<double>(c) * static_cast<double>(c);
  const double dn = static_cast<double>(bits.size());
  return std::ldexp(sum, m) / dn - dn;
}

/// Sum of pi * ln(pi) over m-bit patterns.
double apen_phi(const BitString& bits, int m) {
  if (m == 0) return 0.0;
  const double dn = static_cast<double>(bits.size());
  double phi = 0.0;
  for (auto c : pattern_counts(bits, m)) {
    if (c > 0) {
      const double pi = static_cast<double>(c) / dn;
      phi += pi * std::log(pi);
    }
  }
  return phi;
}

}  // namespace

TestResult serial(const BitString& bits, int m) {
  if (m < 2 || m > 24) throw std::invalid_argument("serial: m must be in [2, 24]");
  const std::size_t n = bits.size();
  if (n < static_cast<std::size_t>(m)) return not_applicable(TestId::Serial, "sequence shorter than m");
  const double psi_m = psi_squared(bits, m);
  const double psi_m1 = psi_squared(bits, m - 1);
  const double psi_m2 = psi_squared(bits, m - 2);
  const double del1 = psi_m - psi_m1;
  const double del2 = psi_m - 2.0 * psi_m1 + psi_m2;
  const double p1 = igamc(std::ldexp(1.0, m - 2), del1 / 2.0);
  const double p2 = igamc(std::ldexp(1.0, m - 3), del2 / 2.0);
  auto r = computed(TestId::Serial, {p1, p2}, {"p1", "p2"});
  r.below_recommended = n < (std::size_t{1} << (m + 3));
  return r;
}

TestResult approximate_entropy(const BitString& bits, int m) {
  if (m < 1 || m > 24) throw std::invalid_argument("approximate_entropy: m must be in [1, 24]");
  const std::size_t n = bits.size();
  if (n < static_cast<std::size_t>(m) + 1) {
    return not_applicable(TestId::ApproximateEntropy, "sequence shorter than m + 1");
  }
  const double apen = apen_phi(bits, m) - apen_phi(bits, m + 1);
  const double chi2 = 2.0 * static_cast<double>(n) * (std::log(2.0) - apen);
  auto r = computed(TestId::ApproximateEntropy, {igamc(std::ldexp(1.0, m - 1), chi2 / 2.0)});
  r.statistic = chi2;
  r.below_recommended = n < (std::size_t{1} << (m + 6));
  return r;
}

}  // namespace tpmkey::randsuite
