// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nist_examples.hpp"
#include "oracles.hpp"
#include "prng_stream.hpp"
#include "tpmkey/distill.hpp"
#include "tpmkey/experiment.hpp"
#include "tpmkey/netlink.hpp"
#include "tpmkey/randsuite.hpp"
#include "wire_gen.hpp"

using namespace tpmkey;
namespace rs = tpmkey::randsuite;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr std::size_t kSessions = 1000;
constexpr std::array<int, 3> kInputBounds = {1, 3, 5};

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string not_passing(const rs::SuiteReport& r) {
  std::string out;
  for (const auto& t : r.results) {
    if (t.family_pass()) continue;
    out += (out.empty() ? "" : ",") + std::string(rs::to_string(t.id)) + (t.applicable() ? "" : "(n/a)");
  }
  return out.empty() ? "none" : out;
}

std::string family_list(const std::vector<rs::TestId>& ids) {
  std::string out;
  for (auto id : ids) out += (out.empty() ? "" : ",") + std::string(rs::to_string(id));
  return out.empty() ? "none" : out;
}

struct PerM {
  int m = 0;
  ExperimentResult result;
  rs::SuiteReport before;
  rs::SuiteReport after;
};

PerM run_for(int m) {
  ExperimentConfig cfg;
  cfg.params.m = m;
  cfg.sessions = kSessions;
  cfg.seed = kSeed;
  PerM out;
  out.m = m;
  out.result = run_experiment(cfg);
  out.before = rs::run_suite(out.result.baseline_stream());
  out.after = rs::run_suite(out.result.secret_stream());
  return out;
}

// Sequential loopback TCP sessions; returns {synchronized pairs, secret mismatches}.
std::pair<std::size_t, std::size_t> networked_trials(std::size_t count) {
  const auto seeds = derive_seeds(kSeed, count);
  net::TcpListener listener(0, "127.0.0.1");
  std::size_t synced = 0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < count; ++i) {
    TpmParams p;
    p.m = kInputBounds[i % kInputBounds.size()];
    net::RemoteOptions ro;
    ro.weight_seed = seeds[i].recipient;
    ro.session_id = i;
    auto peer = std::async(std::launch::async, [&] {
      auto conn = listener.accept();
      return net::run_remote_session(*conn, p, Role::Recipient, ro);
    });
    net::RemoteOptions so;
    so.weight_seed = seeds[i].sender;
    so.input_seed = seeds[i].inputs;
    so.session_id = i;
    auto conn = net::TcpTransport::connect("127.0.0.1", listener.port());
    const auto a = net::run_remote_session(*conn, p, Role::Sender, so);
    const auto b = peer.get();
    if (!a.ok() || !b.ok()) continue;
    ++synced;
    if (distill(a.report.final_weights, p) != distill(b.report.final_weights, p)) ++mismatches;
  }
  return {synced, mismatches};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PerM> runs;
  for (int m : kInputBounds) runs.push_back(run_for(m));

  {  // extrema mass
    const std::map<int, double> target = {{1, 0.23}, {3, 0.28}, {5, 0.34}};
    bool ok = true;
    std::string detail;
    for (const auto& r : runs) {
      const double mass = r.result.distribution_before().extrema_mass();
      ok = ok && std::abs(mass - target.at(r.m)) <= 0.02 && r.result.synchronized >= kSessions;
      detail += "M=" + std::to_string(r.m) + fmt(" mass=%.4f", mass) + fmt(" (target %.2f) ", target.at(r.m));
    }
    report(1, ok, detail);
  }
  {  // post-equalization uniformity
    bool ok = true;
    std::string detail;
    for (const auto& r : runs) {
      const double dev = r.result.distribution_after().max_deviation_from_uniform();
      ok = ok && dev <= 0.005;
      detail += "M=" + std::to_string(r.m) + fmt(" maxdev=%.5f ", dev);
    }
    report(2, ok, detail);
  }
  {  // convergence ordering
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (i > 0) ok = ok && runs[i].result.mean_iterations < runs[i - 1].result.mean_iterations;
      detail += "M=" + std::to_string(runs[i].m) + fmt(" iters=%.1f ", runs[i].result.mean_iterations);
    }
    report(3, ok, detail);
  }
  {  // randomness pattern before and after distillation
    const std::vector<rs::TestId> expected = {rs::TestId::MatrixRank, rs::TestId::LinearComplexity};
    bool ok = true;
    std::string detail;
    for (const auto& r : runs) {
      const auto before = r.before.passing_families();
      const auto after = r.after.families_passed();
      ok = ok && before == expected && after >= 13;
      detail += "M=" + std::to_string(r.m) + " before[" + family_list(before) + "] after=" +
                std::to_string(after) + "/15 (not passing: " + not_passing(r.after) + "); ";
    }
    report(4, ok, detail);
  }
  {  // identical secrets, in-process and networked
    std::size_t in_sync = 0;
    std::size_t in_mismatch = 0;
    for (const auto& r : runs) {
      in_sync += r.result.synchronized;
      in_mismatch += r.result.secret_mismatches;
    }
    const auto [net_sync, net_mismatch] = networked_trials(kSessions);
    const bool ok = in_sync == runs.size() * kSessions && in_mismatch == 0 && net_sync == kSessions &&
                    net_mismatch == 0;
    report(5, ok,
           "in-process " + std::to_string(in_sync) + " synced, " + std::to_string(in_mismatch) +
               " mismatches; tcp " + std::to_string(net_sync) + "/" + std::to_string(kSessions) + " synced, " +
               std::to_string(net_mismatch) + " mismatches");
  }
  {  // equalize oracle
    std::mt19937_64 rng(kSeed);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
      const int l = 1 + static_cast<int>(rng() % 3);
      WeightSequence w(rng() % 65);
      for (auto& v : w) v = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * l + 1)) - l;
      if (equalize(w, l) != testing::equalize_oracle(w, l)) ++mismatches;
    }
    report(6, mismatches == 0, std::to_string(mismatches) + " mismatches over 10000 vectors");
  }
  {  // dropout budget
    std::size_t violations = 0;
    for (const auto& r : runs) violations += r.result.budget_violations;
    report(7, violations == 0, std::to_string(violations) + " budget violations over " +
                                   std::to_string(runs.size() * kSessions) + " sessions");
  }
  {  // randomness-test oracle
    const auto e = testing::load_e_bits(TPMKEY_TEST_DATA "/e_1e6.bin");
    double worst = 0.0;
    std::string worst_name;
    for (const auto& ex : testing::nist_examples(e)) {
      const double err = testing::example_error(ex, ex.run());
      if (err > worst) worst = err, worst_name = ex.name;
    }
    const auto prng = rs::run_suite(testing::prng_bits(1000000, kSeed));
    const bool ok = worst <= 1e-3 && prng.families_passed() == 15;
    report(8, ok, fmt("worst example error %.2e", worst) + (worst_name.empty() ? "" : " (" + worst_name + ")") +
                      "; PRNG 10^6 bits " + std::to_string(prng.families_passed()) + "/15 families pass, " +
                      std::to_string(prng.families_rejected()) + " rejected, not passing: " + not_passing(prng) +
                      ", " + prng.at(rs::TestId::RandomExcursions).note);
  }
  {  // codec round-trip and malformed frames
    std::mt19937_64 rng(kSeed);
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto m = testing::random_message(rng);
      try {
        if (!(net::decode_message(net::encode_message(m)) == m)) ++bad;
      } catch (const std::exception&) {
        ++bad;
      }
    }
    auto kind_of = [](std::vector<std::uint8_t> frame) -> int {
      try {
        net::decode_message(frame);
      } catch (const net::DecodeError& e) {
        return static_cast<int>(e.kind());
      }
      return -1;
    };
    const auto frame = net::encode_message(net::Output{7, 1});
    auto tagged = frame;
    tagged[4] = 0x42;
    auto longer = frame;
    longer.push_back(0);
    auto zero = frame;
    zero.back() = 0;
    const bool kinds_ok =
        kind_of({frame.begin(), frame.end() - 1}) == static_cast<int>(net::DecodeErrorKind::Truncated) &&
        kind_of(tagged) == static_cast<int>(net::DecodeErrorKind::UnknownTag) &&
        kind_of(longer) == static_cast<int>(net::DecodeErrorKind::LengthMismatch) &&
        kind_of({4, 0, 0, 0, 3, 7, 0, 0, 0}) == static_cast<int>(net::DecodeErrorKind::LengthMismatch) &&
        kind_of(zero) == static_cast<int>(net::DecodeErrorKind::InvalidValue);
    report(9, bad == 0 && kinds_ok,
           std::to_string(bad) + " round-trip failures over 10000 messages; malformed kinds " +
               (kinds_ok ? "ok" : "wrong"));
  }

  std::printf("elapsed %.1fs, %d criteria failed\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), failures);
  return failures == 0 ? 0 : 1;
}
