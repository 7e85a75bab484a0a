// tpmkey: experiment runner, randomness report and networked key agreement.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpmkey/distill.hpp"
#include "tpmkey/experiment.hpp"
#include "tpmkey/netlink.hpp"
#include "tpmkey/randsuite.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tpmkey;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kSessionFailure = 2, kIo = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SessionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  int k = 3;
  int l = 8;
  int m = 1;
  int n = 60;
  std::string rule = "hebbian";
  bool allow_m_above_l = false;
  std::size_t sessions = 1000;
  std::uint64_t seed = 1;
  std::uint64_t max_rounds = 0;
  std::string out = ".";
  std::string hash = "sha256";
  bool no_equalize = false;
  bool full_baseline = false;

  // keyagree
  bool listen = false;
  std::string connect;
  std::uint16_t port = 7340;
  std::string role;

  // distill
  std::string weights;

  TpmParams params() const {
    TpmParams p;
    p.k = k;
    p.l = l;
    p.m = m;
    p.n = n;
    p.rule = parse_learning_rule(rule);
    p.allow_m_above_l = allow_m_above_l;
    p.validate();
    return p;
  }

  ExperimentConfig experiment() const {
    ExperimentConfig c;
    c.params = params();
    c.sessions = sessions;
    c.seed = seed;
    c.max_rounds = max_rounds;
    c.hash = hash;
    c.equalize = !no_equalize;
    c.zero_removed_baseline = !full_baseline;
    c.validate();
    return c;
  }
};

json params_json(const TpmParams& p) {
  return {{"k", p.k}, {"l", p.l}, {"m", p.m}, {"n", p.n}, {"rule", to_string(p.rule)},
          {"allow_m_above_l", p.allow_m_above_l}};
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("write failed: " + path.string());
  std::cerr << "wrote " << path.string() << '\n';
}

std::string p_cell(const randsuite::TestResult& r, std::size_t i) {
  if (!r.applicable() || i >= r.p_values.size()) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << r.p_values[i];
  return s.str();
}

std::string verdict(const randsuite::TestResult& r) {
  if (!r.applicable()) return "n/a";
  return r.family_pass() ? "pass" : "FAIL";
}

json suite_json(const randsuite::SuiteReport& rep) {
  json tests = json::array();
  for (const auto& r : rep.results) {
    json t = {{"test", randsuite::to_string(r.id)}, {"applicable", r.applicable()}};
    if (r.applicable()) {
      t["pass"] = r.family_pass();
      t["failures"] = r.failures();
      t["allowed_failures"] = r.allowed_failures();
      t["min_p"] = r.min_p();
    } else {
      t["note"] = r.note;
    }
    tests.push_back(std::move(t));
  }
  return {{"bits", rep.bit_count}, {"families_passed", rep.families_passed()},
          {"families_rejected", rep.families_rejected()}, {"tests", std::move(tests)}};
}

json experiment_summary(const ExperimentResult& r) {
  return {{"params", params_json(r.config.params)},
          {"sessions", r.config.sessions},
          {"seed", r.config.seed},
          {"hash", r.config.hash},
          {"synchronized", r.synchronized},
          {"mean_iterations", r.mean_iterations},
          {"extrema_mass_before", r.distribution_before().extrema_mass()},
          {"extrema_mass_after", r.distribution_after().extrema_mass()},
          {"max_deviation_before", r.distribution_before().max_deviation_from_uniform()},
          {"max_deviation_after", r.distribution_after().max_deviation_from_uniform()},
          {"secret_mismatches", r.secret_mismatches},
          {"budget_violations", r.budget_violations}};
}

int cmd_simulate(const Options& o) {
  const auto cfg = o.experiment();
  const auto dir = output_dir(o);
  const auto r = run_experiment(cfg);
  if (r.synchronized == 0) throw SessionFailure("no session synchronized");
  const auto before = r.distribution_before();
  const auto after = r.distribution_after();
  const double uniform = 1.0 / cfg.params.alphabet_size();

  std::ostringstream csv;
  csv << "weight_value,p_before,p_after,uniform_reference\n" << std::setprecision(10);
  for (int v = -cfg.params.l; v <= cfg.params.l; ++v) {
    csv << v << ',' << before.p(v) << ',' << after.p(v) << ',' << uniform << '\n';
  }
  write_file(dir / "distribution.csv", csv.str());
  const auto summary = experiment_summary(r);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
  return r.synchronized == r.config.sessions ? kOk : kSessionFailure;
}

int cmd_nist(const Options& o) {
  const auto cfg = o.experiment();
  const auto dir = output_dir(o);
  const auto r = run_experiment(cfg);
  if (r.synchronized == 0) throw SessionFailure("no session synchronized");
  const auto before = randsuite::run_suite(r.baseline_stream());
  const auto after = randsuite::run_suite(r.secret_stream());

  std::ostringstream csv;
  csv << "test,label,p_before,p_after\n";
  std::printf("%-40s %-10s %10s %10s\n", "test", "state", "before", "after");
  for (std::size_t t = 0; t < randsuite::kAllTests.size(); ++t) {
    const auto& b = before.results[t];
    const auto& a = after.results[t];
    const auto name = std::string(randsuite::display_name(b.id));
    const auto& labels = b.labels.size() >= a.labels.size() ? b.labels : a.labels;
    const std::size_t rows = std::max<std::size_t>(1, labels.size());
    for (std::size_t i = 0; i < rows; ++i) {
      const std::string label = i < labels.size() ? labels[i] : "";
      csv << '"' << name << "\",\"" << label << "\"," << p_cell(b, i) << ',' << p_cell(a, i) << '\n';
    }
    // The template test has one row per template; print only the family line.
    if (b.id != randsuite::TestId::NonOverlappingTemplate && rows > 1) {
      for (std::size_t i = 0; i < rows; ++i) {
        std::printf("%-40s %-10s %10s %10s\n", i == 0 ? name.c_str() : "", labels[i].c_str(),
                    p_cell(b, i).c_str(), p_cell(a, i).c_str());
      }
      std::printf("%-40s %-10s %10s %10s\n", "", "verdict", verdict(b).c_str(), verdict(a).c_str());
    } else {
      const std::string bp = rows > 1 ? verdict(b) : p_cell(b, 0);
      const std::string ap = rows > 1 ? verdict(a) : p_cell(a, 0);
      std::printf("%-40s %-10s %10s %10s\n", name.c_str(), rows > 1 ? "verdict" : "", bp.c_str(), ap.c_str());
    }
  }
  std::printf("families passed: before %zu/15, after %zu/15\n", before.families_passed(), after.families_passed());

  write_file(dir / "nist.csv", csv.str());
  json doc = experiment_summary(r);
  doc["before"] = suite_json(before);
  doc["after"] = suite_json(after);
  write_file(dir / "nist.json", doc.dump(2) + "\n");
  return kOk;
}

std::unique_ptr<net::Transport> open_transport(const Options& o) {
  if (o.listen) {
    net::TcpListener listener(o.port);
    std::cerr << "listening on port " << listener.port() << std::endl;
    return listener.accept();
  }
  return net::TcpTransport::connect(o.connect, o.port);
}

void write_secret(const Options& o, const TpmParams& p, const net::RemoteReport& rep, std::uint64_t session_id) {
  const auto dir = output_dir(o);
  const auto secret = distill(rep.report.final_weights, p, DistillConfig{o.hash, EncodingMode::Full});
  write_file(dir / "secret.hex", secret.to_hex() + "\n");
  const json meta = {{"params", params_json(p)},
                     {"role", to_string(rep.report.role)},
                     {"session_id", session_id},
                     {"iterations", rep.report.iterations},
                     {"hash", o.hash},
                     {"secret_bits", secret.size()},
                     {"sync_digest", to_hex(rep.report.sync_digest)}};
  write_file(dir / "keyagree.json", meta.dump(2) + "\n");
}

int cmd_keyagree(const Options& o) {
  const auto p = o.params();
  Hasher check(o.hash);
  const auto seeds = derive_seeds(o.seed, 1).front();
  auto options_for = [&](Role role) {
    net::RemoteOptions ro;
    ro.weight_seed = role == Role::Sender ? seeds.sender : seeds.recipient;
    ro.input_seed = seeds.inputs;
    ro.session_id = o.seed;
    ro.max_rounds = o.max_rounds;
    ro.hash = o.hash;
    return ro;
  };
  auto fail_if = [](const net::RemoteReport& r) {
    if (r.ok()) return;
    std::string why = r.error;
    if (r.abort) why += std::string(" (abort: ") + std::string(net::to_string(*r.abort)) + ")";
    throw SessionFailure("session failed: " + why);
  };

  if (!o.listen && o.connect.empty()) {
    // Both parties in this process over loopback.
    net::TcpListener listener(0, "127.0.0.1");
    auto peer = std::async(std::launch::async, [&] {
      auto conn = listener.accept();
      return net::run_remote_session(*conn, p, Role::Recipient, options_for(Role::Recipient));
    });
    auto conn = net::TcpTransport::connect("127.0.0.1", listener.port());
    const auto sender = net::run_remote_session(*conn, p, Role::Sender, options_for(Role::Sender));
    const auto recipient = peer.get();
    fail_if(sender);
    fail_if(recipient);
    if (distill(sender.report.final_weights, p) != distill(recipient.report.final_weights, p)) {
      throw SessionFailure("parties derived different secrets");
    }
    write_secret(o, p, sender, o.seed);
    std::cout << "synchronized after " << sender.report.iterations << " rounds\n";
    return kOk;
  }

  const Role role = !o.role.empty() ? parse_role(o.role) : (o.listen ? Role::Recipient : Role::Sender);
  std::unique_ptr<net::Transport> transport;
  try {
    transport = open_transport(o);
  } catch (const net::TransportError& e) {
    throw IoError(e.what());
  }
  const auto rep = net::run_remote_session(*transport, p, role, options_for(role));
  fail_if(rep);
  write_secret(o, p, rep, o.seed);
  std::cout << "synchronized after " << rep.report.iterations << " rounds as " << to_string(role) << '\n';
  return kOk;
}

WeightMatrix read_weights(const std::string& path, const TpmParams& p) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<int> values;
  std::string token;
  while (in >> token) {
    if (token.front() == '#') {
      std::getline(in, token);
      continue;
    }
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw IoError(path + ": not an integer: " + token);
    values.push_back(v);
  }
  if (values.size() != p.size()) {
    throw IoError(path + ": expected " + std::to_string(p.size()) + " weights, found " + std::to_string(values.size()));
  }
  WeightMatrix w(p.k, p.n, std::move(values));
  try {
    w.check(p);
  } catch (const ParamError& e) {
    throw IoError(path + ": " + e.what());
  }
  return w;
}

int cmd_distill(const Options& o) {
  const auto p = o.params();
  const auto w = read_weights(o.weights, p);
  const auto trace = distill_trace(w, p, DistillConfig{o.hash, EncodingMode::Full});
  const auto dir = output_dir(o);
  write_file(dir / "secret.hex", trace.secret.to_hex() + "\n");
  const json meta = {{"params", params_json(p)},
                     {"hash", o.hash},
                     {"entropy_bits_per_weight", trace.pre_entropy},
                     {"kept_weights", trace.kept.size()},
                     {"encoded_bits", trace.encoded.size()},
                     {"secret_bits", trace.secret.size()}};
  write_file(dir / "distill.json", meta.dump(2) + "\n");
  std::cout << trace.secret.to_hex() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree parity machine key agreement and key distillation"};
  app.set_config("--config", "", "Key/value config file (key = value per line)");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--k", o.k, "Hidden units")->capture_default_str();
  app.add_option("--l", o.l, "Weight bound")->capture_default_str();
  app.add_option("--m", o.m, "Input bound")->capture_default_str();
  app.add_option("--n", o.n, "Inputs per hidden unit")->capture_default_str();
  app.add_option("--rule", o.rule, "hebbian | anti-hebbian | random-walk")->capture_default_str();
  app.add_flag("--allow-m-above-l", o.allow_m_above_l, "Permit an input bound above the weight bound");
  app.add_option("--sessions", o.sessions, "Synchronizations per run")->capture_default_str();
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--max-rounds", o.max_rounds, "Round limit per session (0: 10000*K)")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--hash", o.hash, "Digest used for substitution and sync probes")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Weight distributions before and after equalization");
  auto* nist = app.add_subcommand("nist", "Randomness tests before equalization and after distillation");
  for (auto* sub : {simulate, nist}) {
    sub->add_flag("--no-equalize", o.no_equalize, "Skip equalization before dropout");
    sub->add_flag("--full-baseline", o.full_baseline, "Baseline stream keeps zero weights");
  }

  auto* keyagree = app.add_subcommand("keyagree", "Networked key agreement");
  auto* listen = keyagree->add_flag("--listen", o.listen, "Wait for the peer on --port");
  auto* connect = keyagree->add_option("--connect", o.connect, "Peer host to connect to");
  listen->excludes(connect);
  keyagree->add_option("--port", o.port, "TCP port")->capture_default_str();
  keyagree->add_option("--role", o.role, "sender | recipient (default: connect=sender, listen=recipient)");

  auto* dist = app.add_subcommand("distill", "Distill a secret from a weight file");
  dist->add_option("--weights", o.weights, "Whitespace-separated K*N weights, row-major")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*nist) return cmd_nist(o);
    if (*keyagree) return cmd_keyagree(o);
    if (*dist) return cmd_distill(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const SessionFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSessionFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSessionFailure;
  }
  return kUsage;
}
