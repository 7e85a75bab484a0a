#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpmkey/bitstring.hpp"
#include "tpmkey/distill.hpp"
#include "tpmkey/distribution.hpp"
#include "tpmkey/protocol.hpp"

namespace tpmkey {

/// A batch of independent in-process synchronizations.
struct ExperimentConfig {
  TpmParams params;
  std::size_t sessions = 1000;
  std::uint64_t seed = 1;
  std::uint64_t max_rounds = 0;  // 0: default_max_rounds(params)
  std::string hash = "sha256";
  bool equalize = true;               // off: dropout and substitution act on raw weights
  bool zero_removed_baseline = true;  // off: baseline stream uses the Full encoding

  void validate() const;
};

/// Seeds for every session, derived from the master seed through std::seed_seq.
std::vector<SessionSeeds> derive_seeds(std::uint64_t master, std::size_t count);

struct SessionOutcome {
  SessionReport sender;
  SessionReport recipient;
  bool synchronized = false;
  double pre_entropy = 0.0;
  WeightSequence equalized;  // empty unless synchronized
  std::size_t kept = 0;
  BitString baseline;  // raw weights, baseline encoding
  BitString secret;    // sender's distilled secret
  bool secrets_match = false;
};

SessionOutcome run_one(const ExperimentConfig& cfg, const SessionSeeds& seeds);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SessionOutcome> sessions;  // in session order
  FrequencyTable before{1};
  FrequencyTable after{1};
  std::size_t synchronized = 0;
  std::size_t secret_mismatches = 0;
  std::size_t budget_violations = 0;  // dropout length over K*N*E(W) + log2(2L+1)
  double mean_iterations = 0.0;       // over synchronized sessions

  Distribution distribution_before() const { return Distribution(before); }
  Distribution distribution_after() const { return Distribution(after); }
  /// Concatenation in session order of the per-session streams.
  BitString baseline_stream() const;
  BitString secret_stream() const;
};

/// Sessions run concurrently when built with OpenMP.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Reference version: sessions one after another.
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg);

}  // namespace tpmkey
