#include <set>

#include "doctest.h"
#include "tpmkey/experiment.hpp"

using namespace tpmkey;

namespace {

ExperimentConfig small(std::size_t sessions, std::uint64_t seed) {
  ExperimentConfig c;
  c.params.k = 3;
  c.params.l = 4;
  c.params.m = 2;
  c.params.n = 30;
  c.sessions = sessions;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("seed derivation") {
  const auto a = derive_seeds(5, 100);
  CHECK(a == derive_seeds(5, 100));
  CHECK_FALSE(a == derive_seeds(6, 100));
  std::set<std::uint64_t> distinct;
  for (const auto& s : a) {
    distinct.insert(s.sender);
    distinct.insert(s.recipient);
    distinct.insert(s.inputs);
  }
  CHECK(distinct.size() == 300);
}

TEST_CASE("parallel batch equals serial batch") {
  const auto cfg = small(64, 7);
  const auto par = run_experiment(cfg);
  const auto ser = run_experiment_serial(cfg);
  REQUIRE(par.sessions.size() == ser.sessions.size());
  for (std::size_t i = 0; i < par.sessions.size(); ++i) {
    CHECK(par.sessions[i].sender.final_weights == ser.sessions[i].sender.final_weights);
    CHECK(par.sessions[i].secret == ser.sessions[i].secret);
    CHECK(par.sessions[i].baseline == ser.sessions[i].baseline);
  }
  CHECK(par.mean_iterations == ser.mean_iterations);
  CHECK(par.secret_stream() == ser.secret_stream());
  CHECK(std::vector<std::uint64_t>(par.before.counts().begin(), par.before.counts().end()) ==
        std::vector<std::uint64_t>(ser.before.counts().begin(), ser.before.counts().end()));
}

TEST_CASE("batch aggregates") {
  const auto r = run_experiment(small(50, 8));
  CHECK(r.synchronized == 50);
  CHECK(r.secret_mismatches == 0);
  CHECK(r.budget_violations == 0);
  CHECK(r.before.total() == 50 * 90);
  CHECK(r.after.total() == 50 * 90);
  CHECK(r.mean_iterations > 0.0);
  std::size_t bits = 0;
  for (const auto& s : r.sessions) {
    CHECK(s.secrets_match);
    CHECK(s.secret.size() % 256 == 0);
    bits += s.baseline.size();
  }
  CHECK(r.baseline_stream().size() == bits);
  CHECK(r.distribution_after().max_deviation_from_uniform() <= r.distribution_before().max_deviation_from_uniform());
}

TEST_CASE("pipeline toggles") {
  auto cfg = small(10, 9);
  cfg.zero_removed_baseline = false;
  cfg.equalize = false;
  const auto r = run_experiment(cfg);
  for (const auto& s : r.sessions) {
    CHECK(s.baseline.size() == 90 * static_cast<std::size_t>(full_width(4)));
    CHECK(s.equalized == WeightSequence(s.sender.final_weights.values().begin(), s.sender.final_weights.values().end()));
  }
}

TEST_CASE("unsynchronized sessions are excluded") {
  auto cfg = small(5, 10);
  cfg.max_rounds = 1;
  const auto r = run_experiment(cfg);
  CHECK(r.synchronized == 0);
  CHECK(r.secret_stream().empty());
  CHECK(r.before.total() == 0);
}

TEST_CASE("config validation") {
  auto cfg = small(0, 1);
  CHECK_THROWS(run_experiment(cfg));
  cfg.sessions = 1;
  cfg.hash = "nope";
  CHECK_THROWS(run_experiment(cfg));
}
