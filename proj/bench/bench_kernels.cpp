// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "tpmkey/experiment.hpp"
#include "tpmkey/randsuite.hpp"

using namespace tpmkey;

namespace {

ExperimentConfig batch(std::size_t sessions) {
  ExperimentConfig cfg;
  cfg.params.m = 3;
  cfg.sessions = sessions;
  cfg.seed = 1;
  return cfg;
}

BitString random_bits(std::size_t n) {
  std::mt19937_64 rng(1);
  BitString out;
  out.reserve(n);
  while (out.size() < n) {
    const auto word = rng();
    for (int i = 0; i < 64 && out.size() < n; ++i) out.push_back((word >> i) & 1u);
  }
  return out;
}

void BM_ExperimentParallel(benchmark::State& state) {
  const auto cfg = batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg).mean_iterations);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ExperimentSerial(benchmark::State& state) {
  const auto cfg = batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg).mean_iterations);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SuiteParallel(benchmark::State& state) {
  const auto bits = random_bits(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(randsuite::run_suite(bits).families_passed());
  state.SetBytesProcessed(state.iterations() * state.range(0) / 8);
}

void BM_SuiteSerial(benchmark::State& state) {
  const auto bits = random_bits(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(randsuite::run_suite_serial(bits).families_passed());
  state.SetBytesProcessed(state.iterations() * state.range(0) / 8);
}

}  // namespace

BENCHMARK(BM_ExperimentParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExperimentSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SuiteParallel)->Arg(1 << 17)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SuiteSerial)->Arg(1 << 17)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
