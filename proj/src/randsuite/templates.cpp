// Template matching tests.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "common.hpp"

namespace tpmkey::randsuite {

using detail::computed;
using detail::igamc;
using detail::not_applicable;

std::vector<BitString> aperiodic_templates(int m) {
  if (m < 2 || m > 20) throw std::invalid_argument("aperiodic_templates: m outside [2, 20]");
  std::vector<BitString> out;
  for (std::uint32_t v = 0; v < (1u << m); ++v) {
    BitString t;
    for (int i = m - 1; i >= 0; --i) t.push_back((v >> i) & 1u);
    bool periodic = false;
    for (int shift = 1; shift < m && !periodic; ++shift) {
      bool overlap = true;
      for (int i = 0; i + shift < m && overlap; ++i) overlap = t[i] == t[i + shift];
      periodic = overlap;
    }
    if (!periodic) out.push_back(std::move(t));
  }
  return out;
}

namespace {

bool matches_at(const BitString& bits, std::size_t pos, const BitString& templ) {
  for (std::size_t j = 0; j < templ.size(); ++j) {
    if (bits[pos + j] != templ[j]) return false;
  }
  return true;
}

double non_overlapping_p(const BitString& bits, const BitString& templ, std::size_t blocks) {
  const std::size_t m = templ.size();
  const std::size_t block_len = bits.size() / blocks;
  const double dm = static_cast<double>(m);
  const double dlen = static_cast<double>(block_len);
  const double lambda = (dlen - dm + 1.0) / std::ldexp(1.0, static_cast<int>(m));
  const double variance =
      dlen * (1.0 / std::ldexp(1.0, static_cast<int>(m)) - (2.0 * dm - 1.0) / std::ldexp(1.0, static_cast<int>(2 * m)));
  double chi2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = b * block_len;
    std::size_t hits = 0;
    std::size_t i = 0;
    while (i + m <= block_len) {
      if (matches_at(bits, base + i, templ)) {
        ++hits;
        i += m;
      } else {
        ++i;
      }
    }
    chi2 += (static_cast<double>(hits) - lambda) * (static_cast<double>(hits) - lambda) / variance;
  }
  return igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0);
}

}  // namespace

TestResult non_overlapping_template(const BitString& bits, const BitString& templ, int blocks) {
  if (blocks < 1 || templ.empty()) throw std::invalid_argument("non_overlapping_template: bad parameters");
  const auto nb = static_cast<std::size_t>(blocks);
  if (bits.size() / nb < templ.size()) {
    return not_applicable(TestId::NonOverlappingTemplate, "blocks shorter than template");
  }
  return computed(TestId::NonOverlappingTemplate, {non_overlapping_p(bits, templ, nb)}, {templ.to_string()});
}

TestResult non_overlapping_template(const BitString& bits, int m, int blocks) {
  if (blocks < 1) throw std::invalid_argument("non_overlapping_template: blocks must be >= 1");
  const auto nb = static_cast<std::size_t>(blocks);
  if (bits.size() / nb < static_cast<std::size_t>(m)) {
    return not_applicable(TestId::NonOverlappingTemplate, "blocks shorter than template");
  }
  const auto templates = aperiodic_templates(m);
  std::vector<double> p(templates.size());
  std::vector<std::string> labels(templates.size());
  for (std::size_t t = 0; t < templates.size(); ++t) {
    p[t] = non_overlapping_p(bits, templates[t], nb);
    labels[t] = templates[t].to_string();
  }
  return computed(TestId::NonOverlappingTemplate, std::move(p), std::move(labels));
}

namespace {

/// Class probabilities for 0..4 and >= 5 overlapping matches of an m-run of
/// ones in a block of `block_size` bits (compound Poisson form, as computed by
/// the reference implementation at run time).
std::vector<double> overlapping_probabilities(int m, int block_size) {
  const double lambda = (static_cast<double>(block_size - m) + 1.0) / std::ldexp(1.0, m);
  const double eta = lambda / 2.0;
  std::vector<double> pi(6, 0.0);
  pi[0] = std::exp(-eta);
  double total = pi[0];
  for (int u = 1; u <= 4; ++u) {
    double sum = 0.0;
    for (int l = 1; l <= u; ++l) {
      const double log_term = std::lgamma(u) - std::lgamma(l) - std::lgamma(u - l + 1) +
                              l * std::log(eta) - std::lgamma(l + 1);
      sum += std::exp(log_term);
    }
    pi[static_cast<std::size_t>(u)] = std::exp(-eta) * sum / std::ldexp(1.0, u);
    total += pi[static_cast<std::size_t>(u)];
  }
  pi[5] = 1.0 - total;
  return pi;
}

}  // namespace

TestResult overlapping_template(const BitString& bits, int m, int block_size) {
  if (m < 1 || block_size < m) throw std::invalid_argument("overlapping_template: bad parameters");
  const auto len = static_cast<std::size_t>(block_size);
  const auto blocks = bits.size() / len;
  if (blocks == 0) return not_applicable(TestId::OverlappingTemplate, "no complete block");
  const auto probs = overlapping_probabilities(m, block_size);
  std::vector<double> nu(6, 0.0);
  const auto mm = static_cast<std::size_t>(m);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t hits = 0;
    std::size_t run = 0;
    // Overlapping matches of 1^m: every position where the current run of ones reaches m.
    for (std::size_t i = 0; i < len; ++i) {
      run = bits[b * len + i] ? run + 1 : 0;
      if (run >= mm) ++hits;
    }
    nu[std::min<std::size_t>(hits, 5)] += 1.0;
  }
  const double chi2 = detail::chi_square(nu, probs, static_cast<double>(blocks));
  auto r = computed(TestId::OverlappingTemplate, {igamc(2.5, chi2 / 2.0)});
  r.statistic = chi2;
  return r;
}

}  // namespace tpmkey::randsuite
