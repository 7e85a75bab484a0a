#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "common.hpp"

namespace tpmkey::randsuite {

namespace {

struct TestNames {
  TestId id;
  std::string_view key;
  std::string_view display;
};

constexpr TestNames kNames[] = {
    {TestId::Monobit, "monobit", "Frequency (Monobit)"},
    {TestId::BlockFrequency, "block-frequency", "Frequency within a Block"},
    {TestId::Runs, "runs", "Runs"},
    {TestId::LongestRun, "longest-run", "Longest Run of Ones in a Block"},
    {TestId::MatrixRank, "matrix-rank", "Binary Matrix Rank"},
    {TestId::Spectral, "spectral", "Discrete Fourier Transform (Spectral)"},
    {TestId::NonOverlappingTemplate, "non-overlapping-template", "Non-overlapping Template Matching"},
    {TestId::OverlappingTemplate, "overlapping-template", "Overlapping Template Matching"},
    {TestId::MaurerUniversal, "universal", "Maurer's Universal Statistical"},
    {TestId::LinearComplexity, "linear-complexity", "Linear Complexity"},
    {TestId::Serial, "serial", "Serial"},
    {TestId::ApproximateEntropy, "approximate-entropy", "Approximate Entropy"},
    {TestId::CumulativeSums, "cumulative-sums", "Cumulative Sums"},
    {TestId::RandomExcursions, "random-excursions", "Random Excursions"},
    {TestId::RandomExcursionsVariant, "random-excursions-variant", "Random Excursions Variant"},
};

const TestNames& names(TestId id) {
  for (const auto& n : kNames) {
    if (n.id == id) return n;
  }
  throw std::invalid_argument("unknown test id");
}

}  // namespace

std::string_view to_string(TestId id) { return names(id).key; }
std::string_view display_name(TestId id) { return names(id).display; }

TestId parse_test_id(std::string_view name) {
  for (const auto& n : kNames) {
    if (n.key == name) return n.id;
  }
  throw std::invalid_argument("unknown test: " + std::string(name));
}

namespace detail {

TestResult computed(TestId id, std::vector<double> p_values, std::vector<std::string> labels) {
  TestResult r;
  r.id = id;
  r.outcome = Outcome::Computed;
  r.p_values = std::move(p_values);
  for (auto& p : r.p_values) {
    // Rounding in the tail sums can leave values a hair outside [0, 1].
    p = std::isnan(p) ? 0.0 : std::clamp(p, 0.0, 1.0);
    r.pass.push_back(p >= kAlpha);
  }
  r.labels = std::move(labels);
  r.labels.resize(r.p_values.size());
  return r;
}

TestResult not_applicable(TestId id, std::string note) {
  TestResult r;
  r.id = id;
  r.outcome = Outcome::NotApplicable;
  r.note = std::move(note);
  return r;
}

}  // namespace detail

double TestResult::min_p() const {
  double lo = 1.0;
  for (double p : p_values) lo = std::min(lo, p);
  return lo;
}

std::size_t TestResult::failures() const {
  std::size_t f = 0;
  for (bool ok : pass) f += !ok;
  return f;
}

std::size_t TestResult::allowed_failures() const {
  switch (id) {
    case TestId::RandomExcursions:
    case TestId::RandomExcursionsVariant:
      return 1;
    case TestId::NonOverlappingTemplate: {
      if (p_values.size() <= 1) return 0;
      const double m = static_cast<double>(p_values.size());
      const double p_hat = 1.0 - kAlpha;
      const double min_pass = std::ceil(m * (p_hat - 3.0 * std::sqrt(p_hat * kAlpha / m)));
      return p_values.size() - static_cast<std::size_t>(min_pass);
    }
    default:
      return 0;
  }
}

bool TestResult::family_pass() const { return applicable() && failures() <= allowed_failures(); }

bool TestResult::rejected() const { return applicable() && failures() > allowed_failures(); }

std::size_t minimum_length(const TestSpec& spec) {
  switch (spec.id) {
    case TestId::Monobit:
    case TestId::Runs:
    case TestId::CumulativeSums:
      return 100;
    case TestId::BlockFrequency:
      return std::max<std::size_t>(100, static_cast<std::size_t>(spec.block_size.value_or(128)));
    case TestId::LongestRun:
      return 128;
    case TestId::MatrixRank:
      return 38 * 1024;
    case TestId::Spectral:
      return 1000;
    case TestId::NonOverlappingTemplate: {
      const auto m = static_cast<std::size_t>(spec.pattern_length.value_or(9));
      const auto blocks = static_cast<std::size_t>(spec.block_count.value_or(8));
      // Expected matches per block of at least two.
      return blocks * ((std::size_t{1} << (m + 1)) + m - 1);
    }
    case TestId::OverlappingTemplate: {
      // Expected count of the rarest class (p ~ 0.0704) must reach 5.
      const auto block = static_cast<std::size_t>(spec.block_size.value_or(1032));
      return block * 72;
    }
    case TestId::MaurerUniversal: {
      if (!spec.pattern_length) return 387840;
      const auto l = static_cast<std::size_t>(*spec.pattern_length);
      const auto q = static_cast<std::size_t>(spec.block_count.value_or(10 << l));
      return (q + 1000 * (std::size_t{1} << l)) * l;
    }
    case TestId::LinearComplexity:
      return 200 * static_cast<std::size_t>(spec.block_size.value_or(500));
    case TestId::Serial:
      return std::size_t{1} << (spec.pattern_length.value_or(16) + 3);
    case TestId::ApproximateEntropy:
      return std::size_t{1} << (spec.pattern_length.value_or(10) + 6);
    case TestId::RandomExcursions:
    case TestId::RandomExcursionsVariant:
      return 1000;
  }
  return 0;
}

TestResult run_test(const BitString& bits, const TestSpec& spec) {
  const auto min_len = minimum_length(spec);
  if (bits.size() < min_len) {
    return detail::not_applicable(spec.id, "needs at least " + std::to_string(min_len) + " bits");
  }
  TestResult r;
  switch (spec.id) {
    case TestId::Monobit: r = monobit(bits); break;
    case TestId::BlockFrequency: r = block_frequency(bits, spec.block_size.value_or(128)); break;
    case TestId::Runs: r = runs(bits); break;
    case TestId::LongestRun: r = longest_run(bits); break;
    case TestId::MatrixRank: r = matrix_rank(bits); break;
    case TestId::Spectral: r = spectral(bits); break;
    case TestId::NonOverlappingTemplate:
      r = non_overlapping_template(bits, spec.pattern_length.value_or(9), spec.block_count.value_or(8));
      break;
    case TestId::OverlappingTemplate:
      r = overlapping_template(bits, spec.pattern_length.value_or(9), spec.block_size.value_or(1032));
      break;
    case TestId::MaurerUniversal:
      if (spec.pattern_length) {
        const int l = *spec.pattern_length;
        r = maurer_universal(bits, l, spec.block_count.value_or(10 * (1 << l)));
      } else {
        r = maurer_universal(bits);
      }
      break;
    case TestId::LinearComplexity: r = linear_complexity(bits, spec.block_size.value_or(500)); break;
    case TestId::Serial: r = serial(bits, spec.pattern_length.value_or(16)); break;
    case TestId::ApproximateEntropy: r = approximate_entropy(bits, spec.pattern_length.value_or(10)); break;
    case TestId::CumulativeSums: r = cumulative_sums(bits); break;
    case TestId::RandomExcursions: r = random_excursions(bits); break;
    case TestId::RandomExcursionsVariant: r = random_excursions_variant(bits); break;
  }
  const bool cycle_test =
      spec.id == TestId::RandomExcursions || spec.id == TestId::RandomExcursionsVariant;
  if (cycle_test && r.applicable() && r.below_recommended) {
    return detail::not_applicable(spec.id, "insufficient cycles (" + r.note + ")");
  }
  return r;
}

const TestResult& SuiteReport::at(TestId id) const {
  for (const auto& r : results) {
    if (r.id == id) return r;
  }
  throw std::out_of_range("suite report has no result for " + std::string(to_string(id)));
}

std::size_t SuiteReport::families_passed() const { return passing_families().size(); }

std::vector<TestId> SuiteReport::passing_families() const {
  std::vector<TestId> ids;
  for (const auto& r : results) {
    if (r.family_pass()) ids.push_back(r.id);
  }
  return ids;
}

std::size_t SuiteReport::families_rejected() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const TestResult& r) { return r.rejected(); }));
}

std::size_t SuiteReport::families_not_applicable() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const TestResult& r) { return !r.applicable(); }));
}

SuiteReport run_suite_serial(const BitString& bits) {
  SuiteReport report;
  report.bit_count = bits.size();
  for (TestId id : kAllTests) report.results.push_back(run_test(bits, TestSpec::defaults(id)));
  return report;
}

SuiteReport run_suite(const BitString& bits) {
  SuiteReport report;
  report.bit_count = bits.size();
  report.results.resize(kAllTests.size());
  const auto count = static_cast<long>(kAllTests.size());
  std::vector<std::exception_ptr> errors(kAllTests.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      report.results[idx] = run_test(bits, TestSpec::defaults(kAllTests[idx]));
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return report;
}

}  // namespace tpmkey::randsuite
