#pragma once

// Command-line front end: simulate, bench, attack, costs, verify.
// Exit status: 0 success, 1 conformance/leakage/attack failure or runtime error,
// 2 bad usage.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lp3pss/attacks.hpp"
#include "lp3pss/config.hpp"
#include "lp3pss/conformance.hpp"
#include "lp3pss/observability.hpp"
#include "lp3pss/report.hpp"
#include "lp3pss/simulation.hpp"

namespace lp3pss {

namespace cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

inline bool write_file(const std::string& path, const std::string& body, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  f << body;
  return static_cast<bool>(f);
}

struct SimulateArgs {
  std::string config_path;
  std::size_t n = 0;
  std::uint64_t rounds = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string transcript;
};

inline int simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  SimulationConfig cfg;
  if (!a.config_path.empty()) {
    std::ifstream f(a.config_path);
    if (!f) {
      err << "error: cannot read " << a.config_path << "\n";
      return kFailure;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      err << "error: " << a.config_path << ": " << e.what() << "\n";
      return kFailure;
    }
    cfg = parse_config(j);
  }
  if (a.n) cfg.sensing.n = a.n;
  if (a.rounds) cfg.sensing.rounds = a.rounds;
  cfg.sensing.seed = a.seed;
  if (!a.out.empty()) cfg.output.report = a.out;
  if (!a.transcript.empty()) cfg.output.transcript = a.transcript;

  auto run = run_simulation(cfg);
  auto body = report_to_string(run.report);
  if (run.report.config.output.report.empty()) {
    out << body;
  } else if (!write_file(run.report.config.output.report, body, err)) {
    return kFailure;
  }
  if (!run.report.config.output.transcript.empty()) {
    std::ostringstream s;
    run.transcript.write_jsonl(s);
    if (!write_file(run.report.config.output.transcript, s.str(), err)) return kFailure;
  }

  bool ok = true;
  for (const auto& v : run.report.leakage.violations) {
    err << "leakage: " << v.reason << "\n";
    ok = false;
  }
  for (const auto& verdict : {verify_computation_counts(run.report), verify_communication_counts(run.report)}) {
    for (const auto& m : verdict.mismatches) {
      err << "conformance: " << m.str() << "\n";
      ok = false;
    }
  }
  return ok ? kOk : kFailure;
}

struct BenchArgs {
  std::vector<std::size_t> ns{10, 100, 500};
  std::vector<unsigned> betas{0, 5};
  std::uint64_t rounds = 3;
  std::uint64_t seed = 0;
};

// Each (n, beta) cell runs `rounds` periods; from the second period on exactly
// beta users join and beta leave, so the network size stays at n.
inline SimulationConfig bench_config(std::size_t n, unsigned beta, std::uint64_t rounds, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.sensing.n = n;
  cfg.sensing.rounds = rounds;
  cfg.sensing.seed = seed;
  if (beta > 0) {
    cfg.churn.mu = 1.0;
    cfg.churn.joins = {beta, beta};
    cfg.churn.leaves = {beta, beta};
  }
  return cfg;
}

inline int bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  bool ok = true;
  out << "n,beta,rounds,computation,communication,leakage\n";
  for (auto n : a.ns) {
    for (auto beta : a.betas) {
      auto run = run_simulation(bench_config(n, beta, a.rounds, a.seed));
      auto comp = verify_computation_counts(run.report);
      auto comm = verify_communication_counts(run.report);
      bool leak_ok = run.report.leakage.ok();
      out << n << "," << beta << "," << a.rounds << "," << (comp.ok() ? "ok" : "FAIL") << ","
          << (comm.ok() ? "ok" : "FAIL") << "," << (leak_ok ? "ok" : "FAIL") << "\n";
      for (const auto& m : comp.mismatches) err << "n=" << n << " beta=" << beta << ": " << m.str() << "\n";
      for (const auto& m : comm.mismatches) err << "n=" << n << " beta=" << beta << ": " << m.str() << "\n";
      ok = ok && comp.ok() && comm.ok() && leak_ok;
    }
  }
  return ok ? kOk : kFailure;
}

struct AttackArgs {
  std::string scheme = "lp3pss";
  std::size_t n = 10;
  std::uint64_t seed = 0;
  std::size_t scenarios = 1;
};

inline int attack(const AttackArgs& a, std::ostream& out, std::ostream&) {
  auto scheme = a.scheme == "baseline" ? AttackScheme::kBaseline : AttackScheme::kLp3pss;
  bool ok = true;
  out << "scheme,scenario,n,target,target_rss,dlp_recovered,srlp_exposed,expected\n";
  for (std::size_t i = 0; i < a.scenarios; ++i) {
    auto r = run_attack_scenario(scheme, a.n, a.seed + i);
    out << to_string(scheme) << "," << i << "," << r.n << "," << EntityId::user(r.target).str() << ","
        << r.target_rss << "," << (r.recovered ? std::to_string(*r.recovered) : std::string("none")) << ","
        << r.exposed.size() << "," << (r.expected() ? "yes" : "no") << "\n";
    ok = ok && r.expected();
  }
  return ok ? kOk : kFailure;
}

struct CostsArgs {
  std::vector<std::string> schemes{"lp3pss", "ppss", "pdaft", "lpos"};
  std::vector<std::size_t> ns{10, 100, 500};
  std::string out;
  AnalyticalCostParams params;
};

inline int costs(const CostsArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<CostReport> reports;
  for (const auto& s : a.schemes) {
    auto scheme = parse_scheme(s);
    for (auto n : a.ns) {
      auto p = a.params;
      p.n = n;
      reports.push_back(analytical_cost(scheme, p));
    }
  }
  auto csv = costs_csv(reports);
  if (a.out.empty()) {
    out << csv;
    return kOk;
  }
  return write_file(a.out, csv, err) ? kOk : kFailure;
}

inline int verify(const std::string& path, std::ostream& out, std::ostream& err) {
  std::ifstream f(path);
  if (!f) {
    err << "error: cannot read " << path << "\n";
    return kFailure;
  }
  auto events = Transcript::read_jsonl(f);
  auto report = check_leakage(Transcript::split_views(events));
  for (const auto& [who, ok] : report.conforms) out << who.str() << " " << (ok ? "conforms" : "violates") << "\n";
  for (const auto& v : report.violations) err << "violation: " << v.reason << "\n";
  return report.ok() ? kOk : kFailure;
}

}  // namespace cli

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"LP-3PSS cooperative spectrum sensing simulator"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run the protocol and print a SimulationReport");
  s->add_option("--config", sim.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  s->add_option("--n", sim.n, "number of users (overrides config)")->check(CLI::PositiveNumber);
  s->add_option("--rounds", sim.rounds, "sensing periods (overrides config)")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "master seed")->required();
  s->add_option("--out", sim.out, "report path (default stdout)");
  s->add_option("--transcript", sim.transcript, "JSON-lines transcript path");

  cli::BenchArgs bench;
  auto* b = app.add_subcommand("bench", "per-round operation and traffic conformance over an n list");
  b->add_option("--n", bench.ns, "network sizes")->delimiter(',')->check(CLI::PositiveNumber);
  b->add_option("--beta", bench.betas, "joins per period")->delimiter(',');
  b->add_option("--rounds", bench.rounds, "periods per cell")->check(CLI::PositiveNumber);
  b->add_option("--seed", bench.seed, "master seed")->required();

  cli::AttackArgs atk;
  auto* a = app.add_subcommand("attack", "SRLP / DLP oracles against one scheme");
  a->add_option("--scheme", atk.scheme)->check(CLI::IsMember({"baseline", "lp3pss"}));
  a->add_option("--n", atk.n)->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  a->add_option("--seed", atk.seed);
  a->add_option("--scenarios", atk.scenarios)->check(CLI::PositiveNumber);

  cli::CostsArgs cst;
  auto* c = app.add_subcommand("costs", "analytical operation and bit counts as CSV");
  c->add_option("--schemes", cst.schemes)->delimiter(',')->check(CLI::IsMember({"lp3pss", "ppss", "pdaft", "lpos"}));
  c->add_option("--n", cst.ns)->delimiter(',')->check(CLI::PositiveNumber);
  c->add_option("--out", cst.out, "CSV path (default stdout)");
  c->add_option("--kappa", cst.params.kappa);
  c->add_option("--p-bits", cst.params.p_bits);
  c->add_option("--n-bits", cst.params.n_bits);
  c->add_option("--q-bits", cst.params.q_bits);
  c->add_option("--ope-bits", cst.params.ope_bits);
  c->add_option("--blck-bits", cst.params.blck_bits);
  c->add_option("--gamma", cst.params.gamma);
  c->add_option("--y", cst.params.y);
  c->add_option("--mu", cst.params.mu)->check(CLI::Range(0.0, 1.0));
  c->add_option("--beta", cst.params.beta);

  std::string transcript_path;
  auto* v = app.add_subcommand("verify", "leakage check of a transcript file");
  v->add_option("--transcript", transcript_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return cli::kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return cli::kUsage;
  }

  try {
    if (s->parsed()) return cli::simulate(sim, out, err);
    if (b->parsed()) return cli::bench(bench, out, err);
    if (a->parsed()) return cli::attack(atk, out, err);
    if (c->parsed()) return cli::costs(cst, out, err);
    if (v->parsed()) return cli::verify(transcript_path, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return cli::kFailure;
  }
  return cli::kUsage;
}

}  // namespace lp3pss
