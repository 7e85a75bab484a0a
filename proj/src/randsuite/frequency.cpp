// Frequency-family tests: monobit, block frequency, runs, longest run, cusum.

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "common.hpp"

namespace tpmkey::randsuite {

using detail::computed;
using detail::igamc;
using detail::not_applicable;

TestResult monobit(const BitString& bits) {
  const auto n = bits.size();
  if (n == 0) return not_applicable(TestId::Monobit, "empty input");
  const double s = 2.0 * static_cast<double>(bits.count_ones()) - static_cast<double>(n);
  const double s_obs = std::abs(s) / std::sqrt(static_cast<double>(n));
  auto r = computed(TestId::Monobit, {std::erfc(s_obs / std::sqrt(2.0))});
  r.statistic = s_obs;
  r.below_recommended = n < 100;
  return r;
}

TestResult block_frequency(const BitString& bits, int block_size) {
  if (block_size < 1) throw std::invalid_argument("block_frequency: block size must be >= 1");
  const auto m = static_cast<std::size_t>(block_size);
  const auto blocks = bits.size() / m;
  if (blocks == 0) return not_applicable(TestId::BlockFrequency, "no complete block");
  double sum = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) ones += bits[b * m + j];
    const double pi = static_cast<double>(ones) / static_cast<double>(m);
    sum += (pi - 0.5) * (pi - 0.5);
  }
  const double chi2 = 4.0 * static_cast<double>(m) * sum;
  auto r = computed(TestId::BlockFrequency, {igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0)});
  r.statistic = chi2;
  r.below_recommended = bits.size() < 100;
  return r;
}

TestResult runs(const BitString& bits) {
  const auto n = bits.size();
  if (n < 2) return not_applicable(TestId::Runs, "fewer than two bits");
  const double dn = static_cast<double>(n);
  const double pi = static_cast<double>(bits.count_ones()) / dn;
  TestResult r;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(dn)) {
    // Frequency prerequisite failed; the runs statistic is meaningless.
    r = computed(TestId::Runs, {0.0});
    r.note = "frequency prerequisite failed";
  } else {
    std::size_t v = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) v += bits[k] != bits[k + 1];
    const double num = std::abs(static_cast<double>(v) - 2.0 * dn * pi * (1.0 - pi));
    const double den = 2.0 * std::sqrt(2.0 * dn) * pi * (1.0 - pi);
    r = computed(TestId::Runs, {std::erfc(num / den)});
    r.statistic = static_cast<double>(v);
  }
  r.below_recommended = n < 100;
  return r;
}

TestResult longest_run(const BitString& bits) {
  const auto n = bits.size();
  std::size_t m = 0;
  int lo = 0;
  std::vector<double> probs;
  if (n < 128) return not_applicable(TestId::LongestRun, "needs at least 128 bits");
  if (n < 6272) {
    m = 8;
    lo = 1;
    probs = {0.21484375, 0.3671875, 0.23046875, 0.1875};
  } else if (n < 750000) {
    m = 128;
    lo = 4;
    probs = {0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847};
  } else {
    m = 10000;
    lo = 10;
    probs = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  }
  const int classes = static_cast<int>(probs.size());
  const auto blocks = n / m;
  std::vector<double> nu(probs.size(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    int longest = 0;
    int run = 0;
    for (std::size_t j = 0; j < m; ++j) {
      run = bits[b * m + j] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    const int cls = std::clamp(longest - lo, 0, classes - 1);
    nu[static_cast<std::size_t>(cls)] += 1.0;
  }
  const double chi2 = detail::chi_square(nu, probs, static_cast<double>(blocks));
  auto r = computed(TestId::LongestRun, {igamc(static_cast<double>(classes - 1) / 2.0, chi2 / 2.0)});
  r.statistic = chi2;
  return r;
}

namespace {

double cusum_p_value(long n, long z) {
  // Integer divisions mirror the reference implementation's summation bounds.
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double dz = static_cast<double>(z);
  double sum1 = 0.0;
  for (long k = (-n / z + 1) / 4; k <= (n / z - 1) / 4; ++k) {
    sum1 += detail::normal_cdf(static_cast<double>(4 * k + 1) * dz / sqrt_n);
    sum1 -= detail::normal_cdf(static_cast<double>(4 * k - 1) * dz / sqrt_n);
  }
  double sum2 = 0.0;
  for (long k = (-n / z - 3) / 4; k <= (n / z - 1) / 4; ++k) {
    sum2 += detail::normal_cdf(static_cast<double>(4 * k + 3) * dz / sqrt_n);
    sum2 -= detail::normal_cdf(static_cast<double>(4 * k + 1) * dz / sqrt_n);
  }
  return 1.0 - sum1 + sum2;
}

}  // namespace

TestResult cumulative_sums(const BitString& bits) {
  const auto n = static_cast<long>(bits.size());
  if (n == 0) return not_applicable(TestId::CumulativeSums, "empty input");
  long s = 0;
  long fwd = 0;
  long lo = 0;
  long hi = 0;
  for (long k = 0; k < n; ++k) {
    s += bits[static_cast<std::size_t>(k)] ? 1 : -1;
    fwd = std::max(fwd, std::abs(s));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Backward partial sums are S_n - S_k for k < n, so the range of S gives their maximum.
  const long bwd = std::max(hi - s, s - lo);
  auto r = computed(TestId::CumulativeSums, {cusum_p_value(n, fwd), cusum_p_value(n, bwd)},
                    {"forward", "backward"});
  r.below_recommended = n < 100;
  return r;
}

}  // namespace tpmkey::randsuite
