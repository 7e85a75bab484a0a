#include <random>

#include "doctest.h"
#include "tpmkey/distill.hpp"
#include "tpmkey/protocol.hpp"

using namespace tpmkey;

namespace {

TpmParams shape(int k, int l, int m, int n) {
  TpmParams p;
  p.k = k;
  p.l = l;
  p.m = m;
  p.n = n;
  return p;
}

}  // namespace

TEST_CASE("generate_input") {
  const auto p1 = shape(3, 8, 1, 60);
  InputGenerator a(p1, 5);
  InputGenerator b(p1, 5);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());

  std::mt19937_64 rng(6);
  const auto p3 = shape(1, 8, 3, 1000000);
  const auto x = generate_input(p3, rng);
  std::vector<double> freq(7, 0.0);
  for (int v : x.values()) {
    REQUIRE(v != 0);
    REQUIRE(std::abs(v) <= 3);
    freq[static_cast<std::size_t>(v + 3)] += 1.0;
  }
  for (int v = -3; v <= 3; ++v) {
    if (v != 0) CHECK(std::abs(freq[static_cast<std::size_t>(v + 3)] / 1e6 - 1.0 / 6.0) <= 0.01);
  }
}

TEST_CASE("run_round with identical weights keeps them identical") {
  const auto p = shape(3, 8, 2, 60);
  std::mt19937_64 rng(7);
  const auto w = init_tpm(p, 8);
  Session a(p, Role::Sender, w);
  Session b(p, Role::Recipient, w);
  int agreements = 0;
  for (int round = 0; round < 500; ++round) {
    const auto x = generate_input(p, rng);
    const auto ya = hidden_outputs(a.weights(), x, Role::Sender);
    const auto yb = hidden_outputs(b.weights(), x, Role::Recipient);
    const auto [ra, rb] = run_round(a, b, x);
    if (ya == yb) {
      CHECK(ra.updated);
      CHECK(a.weights() == b.weights());
    }
    agreements += ra.updated;
    if (!(a.weights() == b.weights())) break;
  }
  CHECK(agreements > 0);
}

TEST_CASE("disagreeing outputs leave weights untouched") {
  const auto p = shape(3, 8, 1, 60);
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Session a(p, Role::Sender, rng());
    Session b(p, Role::Recipient, rng());
    const auto wa = a.weights();
    const auto wb = b.weights();
    const auto [ra, rb] = run_round(a, b, generate_input(p, rng));
    CHECK(ra.updated == (ra.output_self == ra.output_peer));
    CHECK(ra.output_self == rb.output_peer);
    if (!ra.updated) {
      ++checked;
      CHECK(a.weights() == wa);
      CHECK(b.weights() == wb);
      CHECK(a.consecutive_agreements() == 0);
    }
    CHECK(a.round() == 1);
    CHECK(b.round() == 1);
  }
  CHECK(checked > 0);
}

TEST_CASE("run_round guards") {
  const auto p = shape(3, 8, 1, 60);
  std::mt19937_64 rng(10);
  Session a(p, Role::Sender, 1);
  Session same(p, Role::Sender, 2);
  CHECK_THROWS_AS(run_round(a, same, generate_input(p, rng)), ProtocolError);
  Session other(shape(3, 7, 1, 60), Role::Recipient, 3);
  CHECK_THROWS_AS(run_round(a, other, generate_input(p, rng)), ProtocolError);
  Session b(p, Role::Recipient, 4);
  a.mark_failed();
  CHECK_THROWS_AS(run_round(a, b, generate_input(p, rng)), ProtocolError);
  CHECK_THROWS_AS(a.mark_synchronized(), ProtocolError);
  CHECK_THROWS_AS(b.conclude(1), ProtocolError);
}

TEST_CASE("consecutive agreements reset on mismatch") {
  const auto p = shape(3, 8, 1, 60);
  std::mt19937_64 rng(11);
  Session a(p, Role::Sender, 12);
  Session b(p, Role::Recipient, 13);
  std::uint64_t expected = 0;
  for (int round = 0; round < 300; ++round) {
    const auto [ra, rb] = run_round(a, b, generate_input(p, rng));
    expected = ra.updated ? expected + 1 : 0;
    CHECK(a.consecutive_agreements() == expected);
    CHECK(b.consecutive_agreements() == expected);
  }
  CHECK(a.updates() <= a.round());
}

TEST_CASE("check_sync") {
  const auto p = shape(3, 8, 1, 60);
  const auto w = init_tpm(p, 14);
  Session a(p, Role::Sender, w);
  Session b(p, Role::Recipient, w);
  CHECK(check_sync(a, b));
  CHECK(check_sync_by_digest(a, b));
  auto values = std::vector<int>(w.values().begin(), w.values().end());
  values[17] = values[17] == 8 ? 7 : values[17] + 1;
  Session c(p, Role::Recipient, WeightMatrix(3, 60, values));
  CHECK_FALSE(check_sync(a, c));
  CHECK_FALSE(check_sync_by_digest(a, c));
}

TEST_CASE("digest path agrees with direct comparison") {
  const auto p = shape(1, 1, 1, 3);
  std::mt19937_64 rng(15);
  int equal = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    Session a(p, Role::Sender, rng());
    Session b(p, Role::Recipient, rng());
    const bool direct = check_sync(a, b);
    CHECK(direct == check_sync_by_digest(a, b));
    equal += direct;
  }
  CHECK(equal > 0);
}

TEST_CASE("run_session synchronizes") {
  const auto p = shape(3, 8, 1, 60);
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const SessionSeeds seeds{rng(), rng(), rng()};
    const auto [s, r] = run_session(p, seeds, default_max_rounds(p));
    REQUIRE(s.status == SessionStatus::Synchronized);
    CHECK(r.status == SessionStatus::Synchronized);
    CHECK(s.role == Role::Sender);
    CHECK(s.final_weights == r.final_weights);
    CHECK(s.sync_digest == r.sync_digest);
    CHECK(s.iterations == r.iterations);
    CHECK(s.updates <= s.iterations);
    CHECK(distill(s.final_weights, p) == distill(r.final_weights, p));
  }
  CHECK(default_max_rounds(p) == 30000);
}

TEST_CASE("one round is not enough") {
  const auto p = shape(3, 8, 1, 60);
  const auto [s, r] = run_session(p, SessionSeeds{}, 1);
  CHECK(s.status == SessionStatus::Failed);
  CHECK(r.status == SessionStatus::Failed);
  CHECK(s.iterations == 1);
  CHECK_THROWS(run_session(p, SessionSeeds{}, 0));
}

TEST_CASE("replay reproduces the session") {
  const auto p = shape(3, 4, 2, 20);
  const SessionSeeds seeds{21, 22, 23};
  std::vector<InputVector> transcript;
  std::vector<int> outputs;
  const auto first = run_session(p, seeds, default_max_rounds(p), "sha256",
                                 [&](const InputVector& x, const RoundResult& s, const RoundResult&) {
                                   transcript.push_back(x);
                                   outputs.push_back(s.output_self);
                                 });
  REQUIRE(first.first.status == SessionStatus::Synchronized);
  CHECK(transcript.size() == first.first.iterations);

  const auto again = run_session(p, seeds, default_max_rounds(p));
  CHECK(again.first.final_weights == first.first.final_weights);
  CHECK(again.first.iterations == first.first.iterations);

  const auto replayed = replay_session(p, seeds, transcript);
  CHECK(replayed.first.status == SessionStatus::Synchronized);
  CHECK(replayed.first.final_weights == first.first.final_weights);
  CHECK(replayed.second.sync_digest == first.second.sync_digest);
  CHECK(replayed.first.updates == first.first.updates);
}
