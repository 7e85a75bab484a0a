// GF(2) tests: binary matrix rank and linear complexity.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "common.hpp"

namespace tpmkey::randsuite {

using detail::computed;
using detail::igamc;
using detail::not_applicable;

int gf2_rank(std::span<const std::uint8_t> bits, int rows, int cols) {
  if (rows < 0 || cols < 0 || cols > 64) throw std::invalid_argument("gf2_rank: unsupported shape");
  if (bits.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw std::invalid_argument("gf2_rank: bit count does not match shape");
  }
  std::vector<std::uint64_t> m(static_cast<std::size_t>(rows), 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (bits[static_cast<std::size_t>(r) * cols + c]) m[r] |= std::uint64_t{1} << c;
    }
  }
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    const std::uint64_t mask = std::uint64_t{1} << c;
    auto pivot = std::find_if(m.begin() + rank, m.end(), [&](std::uint64_t row) { return row & mask; });
    if (pivot == m.end()) continue;
    std::iter_swap(m.begin() + rank, pivot);
    for (int r = 0; r < rows; ++r) {
      if (r != rank && (m[r] & mask)) m[r] ^= m[rank];
    }
    ++rank;
  }
  return rank;
}

namespace {

/// Probability that a random M x Q binary matrix has rank r.
double rank_probability(int r, int rows, int cols) {
  double product = 1.0;
  for (int i = 0; i < r; ++i) {
    product *= (1.0 - std::ldexp(1.0, i - cols)) * (1.0 - std::ldexp(1.0, i - rows)) /
               (1.0 - std::ldexp(1.0, i - r));
  }
  return std::ldexp(product, r * (rows + cols - r) - rows * cols);
}

}  // namespace

TestResult matrix_rank(const BitString& bits) {
  constexpr int kSide = 32;
  constexpr std::size_t kBlock = kSide * kSide;
  const auto matrices = bits.size() / kBlock;
  if (matrices == 0) return not_applicable(TestId::MatrixRank, "no complete 32x32 matrix");
  const double p_full = rank_probability(kSide, kSide, kSide);
  const double p_minus1 = rank_probability(kSide - 1, kSide, kSide);
  const std::vector<double> probs = {p_full, p_minus1, 1.0 - p_full - p_minus1};
  std::vector<double> nu(3, 0.0);
  for (std::size_t i = 0; i < matrices; ++i) {
    const int rank = gf2_rank(bits.bits().subspan(i * kBlock, kBlock), kSide, kSide);
    nu[rank == kSide ? 0 : (rank == kSide - 1 ? 1 : 2)] += 1.0;
  }
  const double chi2 = detail::chi_square(nu, probs, static_cast<double>(matrices));
  auto r = computed(TestId::MatrixRank, {std::exp(-chi2 / 2.0)});
  r.statistic = chi2;
  r.below_recommended = matrices < 38;
  return r;
}

int berlekamp_massey(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  std::vector<std::uint8_t> c(n + 1, 0);
  std::vector<std::uint8_t> b(n + 1, 0);
  std::vector<std::uint8_t> t;
  c[0] = 1;
  b[0] = 1;
  std::size_t l = 0;
  std::ptrdiff_t m = -1;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t d = bits[i];
    for (std::size_t j = 1; j <= l; ++j) d ^= static_cast<std::uint8_t>(c[j] & bits[i - j]);
    if (d == 0) continue;
    t = c;
    const auto shift = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) - m);
    for (std::size_t j = 0; j + shift <= n; ++j) c[j + shift] ^= b[j];
    if (2 * l <= i) {
      l = i + 1 - l;
      m = static_cast<std::ptrdiff_t>(i);
      b = std::move(t);
    }
  }
  return static_cast<int>(l);
}

TestResult linear_complexity(const BitString& bits, int block_size) {
  if (block_size < 1) throw std::invalid_argument("linear_complexity: block size must be >= 1");
  const auto m = static_cast<std::size_t>(block_size);
  const auto blocks = bits.size() / m;
  if (blocks == 0) return not_applicable(TestId::LinearComplexity, "no complete block");
  const double dm = static_cast<double>(m);
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  const double mu = dm / 2.0 + (9.0 - sign) / 36.0 - (dm / 3.0 + 2.0 / 9.0) / std::ldexp(1.0, block_size);
  // Class probabilities as tabulated by the reference implementation (pi0 = 0.01047, not 1/96).
  const std::vector<double> probs = {0.01047, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833};
  std::vector<double> nu(7, 0.0);
  for (std::size_t i = 0; i < blocks; ++i) {
    const int lc = berlekamp_massey(bits.bits().subspan(i * m, m));
    const double t = sign * (static_cast<double>(lc) - mu) + 2.0 / 9.0;
    std::size_t cls = 6;
    if (t <= -2.5) {
      cls = 0;
    } else if (t <= -1.5) {
      cls = 1;
    } else if (t <= -0.5) {
      cls = 2;
    } else if (t <= 0.5) {
      cls = 3;
    } else if (t <= 1.5) {
      cls = 4;
    } else if (t <= 2.5) {
      cls = 5;
    }
    nu[cls] += 1.0;
  }
  const double chi2 = detail::chi_square(nu, probs, static_cast<double>(blocks));
  auto r = computed(TestId::LinearComplexity, {igamc(3.0, chi2 / 2.0)});
  r.statistic = chi2;
  r.below_recommended = blocks < 200;
  return r;
}

}  // namespace tpmkey::randsuite
