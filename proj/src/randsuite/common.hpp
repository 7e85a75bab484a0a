#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "tpmkey/randsuite.hpp"

namespace tpmkey::randsuite::detail {

/// Upper regularized incomplete gamma Q(a, x).
inline double igamc(double a, double x) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(a, x);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Chi-square statistic of observed counts against expected probabilities.
inline double chi_square(const std::vector<double>& observed, const std::vector<double>& probs,
                         double trials) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = trials * probs[i];
    chi2 += (observed[i] - expected) * (observed[i] - expected) / expected;
  }
  return chi2;
}

TestResult computed(TestId id, std::vector<double> p_values, std::vector<std::string> labels = {});
TestResult not_applicable(TestId id, std::string note);

}  // namespace tpmkey::randsuite::detail
