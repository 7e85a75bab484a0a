#include "tpmkey/experiment.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>
#include <tuple>

namespace tpmkey {

void ExperimentConfig::validate() const {
  params.validate();
  if (sessions < 1) throw ParamError("sessions must be >= 1");
  Hasher check(hash);
}

std::vector<SessionSeeds> derive_seeds(std::uint64_t master, std::size_t count) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)};
  std::vector<std::uint32_t> words(count * 6);
  seq.generate(words.begin(), words.end());
  auto pair = [&](std::size_t i) { return (std::uint64_t{words[i]} << 32) | words[i + 1]; };
  std::vector<SessionSeeds> out(count);
  for (std::size_t s = 0; s < count; ++s) out[s] = {pair(6 * s), pair(6 * s + 2), pair(6 * s + 4)};
  return out;
}

SessionOutcome run_one(const ExperimentConfig& cfg, const SessionSeeds& seeds) {
  const auto& p = cfg.params;
  const auto max_rounds = cfg.max_rounds == 0 ? default_max_rounds(p) : cfg.max_rounds;
  SessionOutcome out;
  std::tie(out.sender, out.recipient) = run_session(p, seeds, max_rounds, cfg.hash);
  out.synchronized = out.sender.status == SessionStatus::Synchronized;
  if (!out.synchronized) return out;

  const auto raw = out.sender.final_weights.values();
  out.pre_entropy = entropy(weight_distribution(raw, p.l));
  out.baseline = encode_bits(raw, p.l, cfg.zero_removed_baseline ? EncodingMode::ZeroRemoved : EncodingMode::Full);

  const Hasher hasher(cfg.hash);
  auto secret_of = [&](const WeightMatrix& w, WeightSequence* equalized) {
    WeightSequence stage = cfg.equalize ? equalize(w.values(), p) : WeightSequence(w.values().begin(), w.values().end());
    const auto kept = dropout(stage, out.pre_entropy, p);
    if (equalized != nullptr) {
      *equalized = std::move(stage);
      out.kept = kept.size();
    }
    return substitute(encode_bits(kept, p.l, EncodingMode::Full), hasher);
  };
  out.secret = secret_of(out.sender.final_weights, &out.equalized);
  out.secrets_match = secret_of(out.recipient.final_weights, nullptr) == out.secret;
  return out;
}

namespace {

ExperimentResult aggregate(const ExperimentConfig& cfg, std::vector<SessionOutcome> sessions) {
  const auto& p = cfg.params;
  ExperimentResult r;
  r.config = cfg;
  r.before = FrequencyTable(p.l);
  r.after = FrequencyTable(p.l);
  const double width = std::log2(static_cast<double>(p.alphabet_size()));
  double iterations = 0.0;
  for (const auto& s : sessions) {
    if (!s.synchronized) continue;
    ++r.synchronized;
    iterations += static_cast<double>(s.sender.iterations);
    r.before.add(s.sender.final_weights.values());
    r.after.add(s.equalized);
    if (!s.secrets_match) ++r.secret_mismatches;
    const double budget = static_cast<double>(p.size()) * s.pre_entropy + width;
    if (static_cast<double>(s.kept) * width > budget + 1e-9) ++r.budget_violations;
  }
  r.mean_iterations = r.synchronized == 0 ? 0.0 : iterations / static_cast<double>(r.synchronized);
  r.sessions = std::move(sessions);
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto seeds = derive_seeds(cfg.seed, cfg.sessions);
  std::vector<SessionOutcome> sessions(cfg.sessions);
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(cfg.sessions);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      sessions[static_cast<std::size_t>(i)] = run_one(cfg, seeds[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(tpmkey_experiment_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return aggregate(cfg, std::move(sessions));
}

ExperimentResult run_experiment_serial(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto seeds = derive_seeds(cfg.seed, cfg.sessions);
  std::vector<SessionOutcome> sessions;
  sessions.reserve(cfg.sessions);
  for (const auto& s : seeds) sessions.push_back(run_one(cfg, s));
  return aggregate(cfg, std::move(sessions));
}

BitString ExperimentResult::baseline_stream() const {
  BitString out;
  for (const auto& s : sessions) out.append(s.baseline);
  return out;
}

BitString ExperimentResult::secret_stream() const {
  BitString out;
  for (const auto& s : sessions) out.append(s.secret);
  return out;
}

}  // namespace tpmkey
