#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>

#include "common.hpp"

namespace tpmkey::randsuite {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

TestResult spectral(const BitString& bits) {
  const auto n = bits.size();
  if (n < 2) return detail::not_applicable(TestId::Spectral, "fewer than two bits");
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in.get()[i] = bits[i] ? 1.0 : -1.0;
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  const double dn = static_cast<double>(n);
  const double threshold = std::sqrt(std::log(1.0 / 0.05) * dn);
  std::size_t below = 0;
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double re = out.get()[j][0];
    const double im = out.get()[j][1];
    below += std::sqrt(re * re + im * im) < threshold;
  }
  const double expected = 0.95 * dn / 2.0;
  const double d = (static_cast<double>(below) - expected) / std::sqrt(dn * 0.95 * 0.05 / 4.0);
  auto r = detail::computed(TestId::Spectral, {std::erfc(std::abs(d) / std::sqrt(2.0))});
  r.statistic = d;
  r.below_recommended = n < 1000;
  return r;
}

}  // namespace tpmkey::randsuite
