#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpmkey/bitstring.hpp"

namespace tpmkey::randsuite {

inline constexpr double kAlpha = 0.01;

/// The fifteen tests, in report order.
enum class TestId {
  Monobit,
  BlockFrequency,
  Runs,
  LongestRun,
  MatrixRank,
  Spectral,
  NonOverlappingTemplate,
  OverlappingTemplate,
  MaurerUniversal,
  LinearComplexity,
  Serial,
  ApproximateEntropy,
  CumulativeSums,
  RandomExcursions,
  RandomExcursionsVariant,
};

inline constexpr std::array<TestId, 15> kAllTests = {
    TestId::Monobit,           TestId::BlockFrequency,     TestId::Runs,
    TestId::LongestRun,        TestId::MatrixRank,         TestId::Spectral,
    TestId::NonOverlappingTemplate, TestId::OverlappingTemplate, TestId::MaurerUniversal,
    TestId::LinearComplexity,  TestId::Serial,             TestId::ApproximateEntropy,
    TestId::CumulativeSums,    TestId::RandomExcursions,   TestId::RandomExcursionsVariant,
};

std::string_view to_string(TestId id);
std::string_view display_name(TestId id);
TestId parse_test_id(std::string_view name);

/// Test parameters. Unset fields take the suite defaults: 128-bit blocks for
/// BlockFrequency, 500-bit blocks for LinearComplexity, template length 9,
/// serial m = 16, approximate-entropy m = 10, universal L/Q chosen from n.
struct TestSpec {
  TestId id = TestId::Monobit;
  std::optional<int> block_size;      // BlockFrequency M, LinearComplexity M, OverlappingTemplate M
  std::optional<int> pattern_length;  // template m, serial m, apen m, universal L
  std::optional<int> block_count;     // NonOverlappingTemplate N, universal Q

  static TestSpec defaults(TestId id) { return TestSpec{id, {}, {}, {}}; }
};

enum class Outcome { Computed, NotApplicable };

struct TestResult {
  TestId id = TestId::Monobit;
  Outcome outcome = Outcome::NotApplicable;
  std::vector<double> p_values;
  std::vector<std::string> labels;  // one per P-value: state, template, "forward", ...
  std::vector<bool> pass;           // pass[i] == (p_values[i] >= kAlpha)
  double statistic = std::numeric_limits<double>::quiet_NaN();  // single-valued tests only
  bool below_recommended = false;   // shorter than the recommended minimum length
  std::string note;

  bool applicable() const { return outcome == Outcome::Computed; }
  double min_p() const;
  std::size_t failures() const;
  /// Family verdict. Single- and dual-valued tests need every P-value to
  /// pass; the excursion tests tolerate one failing state; the template
  /// test allows the binomial slack of 148 independent checks.
  bool family_pass() const;
  std::size_t allowed_failures() const;
  /// Computed and failed. NotApplicable results are neither passed nor rejected.
  bool rejected() const;
};

/// Recommended minimum bit count for run_test; below it the result is NotApplicable.
std::size_t minimum_length(const TestSpec& spec);

// Individual tests. Each computes directly on `bits`; inputs too short for
// the statistic to exist yield NotApplicable, shorter-than-recommended
// inputs set below_recommended.
TestResult monobit(const BitString& bits);
TestResult block_frequency(const BitString& bits, int block_size = 128);
TestResult runs(const BitString& bits);
TestResult longest_run(const BitString& bits);
TestResult matrix_rank(const BitString& bits);
TestResult spectral(const BitString& bits);
TestResult non_overlapping_template(const BitString& bits, int m = 9, int blocks = 8);
/// Single explicit template, e.g. "000000001".
TestResult non_overlapping_template(const BitString& bits, const BitString& templ, int blocks);
TestResult overlapping_template(const BitString& bits, int m = 9, int block_size = 1032);
TestResult maurer_universal(const BitString& bits);
TestResult maurer_universal(const BitString& bits, int block_length, int init_blocks);
TestResult linear_complexity(const BitString& bits, int block_size = 500);
TestResult serial(const BitString& bits, int m = 16);
TestResult approximate_entropy(const BitString& bits, int m = 10);
TestResult cumulative_sums(const BitString& bits);
TestResult random_excursions(const BitString& bits);
TestResult random_excursions_variant(const BitString& bits);

/// Aperiodic templates of length m in increasing binary order.
std::vector<BitString> aperiodic_templates(int m);

/// Linear complexity of a bit sequence (Berlekamp-Massey over GF(2)).
int berlekamp_massey(std::span<const std::uint8_t> bits);

/// Rank over GF(2) of a rows x cols matrix given row-major.
int gf2_rank(std::span<const std::uint8_t> bits, int rows, int cols);

TestResult run_test(const BitString& bits, const TestSpec& spec);

struct SuiteReport {
  std::size_t bit_count = 0;
  std::vector<TestResult> results;  // kAllTests order

  const TestResult& at(TestId id) const;
  std::size_t families_passed() const;
  std::vector<TestId> passing_families() const;
  std::size_t families_rejected() const;
  std::size_t families_not_applicable() const;
};

/// Runs all fifteen tests; tests run concurrently when built with OpenMP.
SuiteReport run_suite(const BitString& bits);
/// Reference version: one test after another.
SuiteReport run_suite_serial(const BitString& bits);

}  // namespace tpmkey::randsuite
