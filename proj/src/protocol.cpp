#include "tpmkey/protocol.hpp"

#include "tpmkey/distill.hpp"
#include "tpmkey/hash.hpp"

namespace tpmkey {

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Learning: return "learning";
    case SessionStatus::Synchronized: return "synchronized";
    case SessionStatus::Failed: return "failed";
  }
  return "?";
}

InputGenerator::InputGenerator(const TpmParams& params, std::uint64_t seed)
    : params_(params), rng_(seed) {
  params_.validate();
}

InputVector InputGenerator::next() { return generate_input(params_, rng_); }

InputVector generate_input(const TpmParams& params, std::mt19937_64& rng) {
  params.validate();
  std::uniform_int_distribution<int> dist(0, 2 * params.m - 1);
  std::vector<int> values(params.size());
  // 2M slots, zero skipped.
  for (auto& v : values) {
    const int r = dist(rng);
    v = r < params.m ? r - params.m : r - params.m + 1;
  }
  return InputVector(params.k, params.n, std::move(values));
}

Session::Session(const TpmParams& params, Role role, WeightMatrix weights)
    : params_(params), role_(role), weights_(std::move(weights)) {
  params_.validate();
  weights_.check(params_);
}

Session::Session(const TpmParams& params, Role role, std::uint64_t weight_seed)
    : Session(params, role, init_tpm(params, weight_seed)) {}

void Session::require_learning() const {
  if (status_ != SessionStatus::Learning) throw ProtocolError("session is no longer learning");
}

int Session::respond(const InputVector& x) {
  require_learning();
  if (pending_input_) throw ProtocolError("previous round not concluded");
  x.check(params_);
  pending_hidden_ = hidden_outputs(weights_, x, role_);
  pending_output_ = tpm_output(pending_hidden_);
  pending_input_ = x;
  return pending_output_;
}

RoundResult Session::conclude(int peer_output) {
  require_learning();
  if (!pending_input_) throw ProtocolError("conclude without respond");
  if (peer_output != 1 && peer_output != -1) throw ProtocolError("peer output must be -1 or +1");
  RoundResult result{std::move(*pending_input_), pending_output_, peer_output, false};
  pending_input_.reset();
  if (result.output_self == result.output_peer) {
    apply_update(weights_, result.input, pending_hidden_, result.output_self, params_.rule, params_.l);
    result.updated = true;
    ++updates_;
    ++consecutive_agreements_;
  } else {
    consecutive_agreements_ = 0;
  }
  ++round_;
  return result;
}

void Session::mark_synchronized() {
  require_learning();
  status_ = SessionStatus::Synchronized;
}

void Session::mark_failed() {
  require_learning();
  status_ = SessionStatus::Failed;
}

std::pair<RoundResult, RoundResult> run_round(Session& a, Session& b, const InputVector& x) {
  if (!(a.params() == b.params())) throw ProtocolError("sessions disagree on parameters");
  if (a.role() == b.role()) throw ProtocolError("sessions must have opposite roles");
  const int oa = a.respond(x);
  const int ob = b.respond(x);
  return {a.conclude(ob), b.conclude(oa)};
}

bool check_sync(const Session& a, const Session& b) { return a.weights() == b.weights(); }

bool check_sync_by_digest(const Session& a, const Session& b, const std::string& hash) {
  const Hasher h(hash);
  return weight_digest(a.weights(), a.params().l, h) == weight_digest(b.weights(), b.params().l, h);
}

std::uint64_t default_max_rounds(const TpmParams& params) {
  return 10'000ULL * static_cast<std::uint64_t>(params.k);
}

SessionReport make_report(const Session& s, const std::string& hash) {
  SessionReport r;
  r.role = s.role();
  r.status = s.status();
  r.iterations = s.round();
  r.updates = s.updates();
  r.final_weights = s.weights();
  r.sync_digest = weight_digest(s.weights(), s.params().l, Hasher(hash));
  return r;
}

namespace {

template <class NextInput>
std::pair<SessionReport, SessionReport> drive(const TpmParams& params, const SessionSeeds& seeds,
                                              std::uint64_t max_rounds, const std::string& hash,
                                              NextInput&& next_input, const RoundObserver& observer) {
  if (max_rounds < 1) throw ParamError("max_rounds must be >= 1");
  Session sender(params, Role::Sender, seeds.sender);
  Session recipient(params, Role::Recipient, seeds.recipient);
  while (!check_sync(sender, recipient)) {
    if (sender.round() >= max_rounds) break;
    auto x = next_input();
    if (!x) break;
    auto [rs, rr] = run_round(sender, recipient, *x);
    if (observer) observer(*x, rs, rr);
  }
  if (check_sync(sender, recipient)) {
    sender.mark_synchronized();
    recipient.mark_synchronized();
  } else {
    sender.mark_failed();
    recipient.mark_failed();
  }
  return {make_report(sender, hash), make_report(recipient, hash)};
}

}  // namespace

std::pair<SessionReport, SessionReport> run_session(const TpmParams& params, const SessionSeeds& seeds,
                                                    std::uint64_t max_rounds, const std::string& hash,
                                                    const RoundObserver& observer) {
  InputGenerator inputs(params, seeds.inputs);
  return drive(params, seeds, max_rounds, hash,
               [&]() -> std::optional<InputVector> { return inputs.next(); }, observer);
}

std::pair<SessionReport, SessionReport> replay_session(const TpmParams& params, const SessionSeeds& seeds,
                                                       const std::vector<InputVector>& inputs,
                                                       const std::string& hash) {
  std::size_t next = 0;
  return drive(params, seeds, inputs.size() + 1, hash,
               [&]() -> std::optional<InputVector> {
                 if (next == inputs.size()) return std::nullopt;
                 return inputs[next++];
               },
               {});
}

}  // namespace tpmkey
