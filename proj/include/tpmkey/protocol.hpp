#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "tpmkey/tpm.hpp"

namespace tpmkey {

enum class SessionStatus { Learning, Synchronized, Failed };

std::string_view to_string(SessionStatus status);

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded source of public input vectors. Owned by the Sender.
class InputGenerator {
 public:
  InputGenerator(const TpmParams& params, std::uint64_t seed);
  InputVector next();

 private:
  TpmParams params_;
  std::mt19937_64 rng_;
};

/// Entries uniform over {-M..-1, 1..M}.
InputVector generate_input(const TpmParams& params, std::mt19937_64& rng);

struct RoundResult {
  InputVector input;
  int output_self = 0;
  int output_peer = 0;
  bool updated = false;
};

/// One party's side of the mutual learning loop.
///
/// A round is two calls: respond() computes and publishes this party's
/// output for the shared input, conclude() takes the peer's output and
/// applies the learning rule when both agree.
class Session {
 public:
  Session(const TpmParams& params, Role role, WeightMatrix weights);
  Session(const TpmParams& params, Role role, std::uint64_t weight_seed);

  const TpmParams& params() const { return params_; }
  Role role() const { return role_; }
  const WeightMatrix& weights() const { return weights_; }
  std::uint64_t round() const { return round_; }
  std::uint64_t updates() const { return updates_; }
  std::uint64_t consecutive_agreements() const { return consecutive_agreements_; }
  SessionStatus status() const { return status_; }

  int respond(const InputVector& x);
  RoundResult conclude(int peer_output);

  void mark_synchronized();
  void mark_failed();

 private:
  void require_learning() const;

  TpmParams params_;
  Role role_;
  WeightMatrix weights_;
  std::uint64_t round_ = 0;
  std::uint64_t updates_ = 0;
  std::uint64_t consecutive_agreements_ = 0;
  SessionStatus status_ = SessionStatus::Learning;

  std::optional<InputVector> pending_input_;
  HiddenOutputs pending_hidden_;
  int pending_output_ = 0;
};

std::pair<RoundResult, RoundResult> run_round(Session& a, Session& b, const InputVector& x);

/// Direct comparison of the two weight matrices.
bool check_sync(const Session& a, const Session& b);
/// Sync test through digests of the canonical weight encoding, as done over the wire.
bool check_sync_by_digest(const Session& a, const Session& b, const std::string& hash = "sha256");

struct SessionReport {
  Role role = Role::Sender;
  SessionStatus status = SessionStatus::Learning;
  std::uint64_t iterations = 0;
  std::uint64_t updates = 0;
  WeightMatrix final_weights;
  std::vector<std::uint8_t> sync_digest;
};

struct SessionSeeds {
  std::uint64_t sender = 1;
  std::uint64_t recipient = 2;
  std::uint64_t inputs = 3;

  friend bool operator==(const SessionSeeds&, const SessionSeeds&) = default;
};

std::uint64_t default_max_rounds(const TpmParams& params);

/// Called once per round with the shared input; lets callers record transcripts.
using RoundObserver = std::function<void(const InputVector&, const RoundResult& sender,
                                         const RoundResult& recipient)>;

/// Runs both parties in-process until their weights coincide or `max_rounds`
/// rounds have been spent. The first report belongs to the Sender.
std::pair<SessionReport, SessionReport> run_session(const TpmParams& params, const SessionSeeds& seeds,
                                                    std::uint64_t max_rounds,
                                                    const std::string& hash = "sha256",
                                                    const RoundObserver& observer = {});

/// Replays a recorded sequence of inputs into two fresh sessions.
std::pair<SessionReport, SessionReport> replay_session(const TpmParams& params, const SessionSeeds& seeds,
                                                       const std::vector<InputVector>& inputs,
                                                       const std::string& hash = "sha256");

SessionReport make_report(const Session& s, const std::string& hash);

}  // namespace tpmkey
