// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "lp3pss/attacks.hpp"
#include "lp3pss/cli.hpp"
#include "lp3pss/conformance.hpp"
#include "lp3pss/report.hpp"
#include "lp3pss/simulation.hpp"

using namespace lp3pss;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

SimulationConfig base(std::size_t n, std::uint64_t rounds, std::uint64_t seed) {
  SimulationConfig c;
  c.sensing.n = n;
  c.sensing.rounds = rounds;
  c.sensing.seed = seed;
  return c;
}

Key128 random_key(Rng& rng) {
  Key128 k;
  for (auto& b : k) b = static_cast<std::uint8_t>(rng());
  return k;
}

// 1. Order preservation: exhaustive at d=8, random pairs at d=16.
Outcome ope_correctness() {
  Outcome o;
  auto rng = make_stream(2024, 1);
  std::size_t violations = 0;
  for (int k = 0; k < 100; ++k) {
    PrfSumOpe ope(OpeKey{.key_bytes = random_key(rng), .domain_bits = 8, .range_bits = 32});
    std::uint64_t prev = 0;
    for (std::uint64_t m = 0; m < 256; ++m) {
      auto c = ope.encrypt(m).value;
      if (m > 0 && c <= prev) ++violations;
      prev = c;
    }
  }
  std::size_t pairs = 0;
  for (int k = 0; k < 10; ++k) {
    PrfSumOpe ope(OpeKey{.key_bytes = random_key(rng), .domain_bits = 16, .range_bits = 32});
    std::uniform_int_distribution<std::uint64_t> pick(0, 65535);
    for (int i = 0; i < 100000; ++i, ++pairs) {
      auto a = pick(rng), b = pick(rng);
      if (i % 1000 == 0) b = a;
      auto ca = ope.encrypt(a), cb = ope.encrypt(b);
      if ((a < b) != (ca < cb) || (a == b) != (ca == cb)) ++violations;
    }
  }
  o.detail = "100 keys x 256 plaintexts at d=8, " + std::to_string(pairs) + " pairs at d=16, " +
             std::to_string(violations) + " violations";
  if (violations) o.pass = false;
  return o;
}

// 2. White-box bit oracle: b_i == (RSS_i >= tau) for every present user.
Outcome bit_correctness() {
  Outcome o;
  auto cfg = base(50, 1000, 7);
  cfg.churn = {.mu = 0.2, .joins = {0, 3}, .leaves = {0, 3}};
  cfg.sensing.miss_probability = 0.1;
  auto run = run_simulation(cfg);
  const auto tau = run.report.tau;
  std::size_t checked = 0, mismatches = 0, absent = 0, churn_rounds = 0;
  for (const auto& r : run.report.rounds) {
    churn_rounds += r.churn;
    absent += r.n_live - r.reported_rss.size();
    if (r.bits.size() != r.reported_rss.size()) ++mismatches;
    for (const auto& pb : r.bits) {
      auto it = r.reported_rss.find(pb.user);
      if (it == r.reported_rss.end()) {
        ++mismatches;
        continue;
      }
      ++checked;
      if (pb.bit != (it->second >= tau ? 1 : 0)) ++mismatches;
    }
  }
  o.detail = std::to_string(checked) + " bits over 1000 rounds (" + std::to_string(churn_rounds) +
             " churn rounds, " + std::to_string(absent) + " missing reports), " + std::to_string(mismatches) +
             " mismatches";
  if (mismatches || churn_rounds == 0 || absent == 0) o.pass = false;
  return o;
}

// 3. Per-round operation counts against the computational-overhead row.
Outcome computation_counts() {
  Outcome o;
  std::size_t rounds = 0;
  for (std::size_t n : {10, 100, 500}) {
    for (unsigned beta : {0u, 5u}) {
      auto run = run_simulation(cli::bench_config(n, beta, 3, 11 + n + beta));
      auto v = verify_computation_counts(run.report);
      rounds += v.rounds_checked;
      if (!v.ok()) o.fail("n=" + std::to_string(n) + " beta=" + std::to_string(beta) + ": " + v.mismatches[0].str());
      for (const auto& r : run.report.rounds) {
        unsigned expect_beta = r.round >= 2 ? beta : 0;
        if (r.beta != expect_beta) o.fail("n=" + std::to_string(n) + ": round " + std::to_string(r.round) +
                                          " has beta " + std::to_string(r.beta));
        auto fc = r.ops.at(EntityId::fusion_center()).total();
        if (fc.aead_dec != 1 || fc.aead_enc != expect_beta || fc.ope_enc != expect_beta) {
          o.fail("FC counts off in round " + std::to_string(r.round));
        }
        auto gw = r.ops.at(EntityId::gateway())[Phase::kSensing];
        if (gw.aead_dec != r.n_live || gw.aead_enc != 1) o.fail("GW counts off in round " + std::to_string(r.round));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(rounds) + " rounds, n in {10,100,500}, beta in {0,5}, exact";
  return o;
}

// 4. Logical ciphertexts, wire bytes, and the analytical ordering.
Outcome communication_counts() {
  Outcome o;
  AnalyticalCostParams params;
  for (std::size_t n : {10, 100, 500}) {
    auto run = run_simulation(base(n, 3, 5 + n));
    auto v = verify_communication_counts(run.report);
    if (!v.ok()) o.fail(v.mismatches[0].str());
    params.n = n;
    auto analytic = analytical_cost(Scheme::kLp3pss, params).comm_bits;
    for (const auto& r : run.report.rounds) {
      auto logical = r.comm.logical_ciphertexts();
      if (logical != n + 1) o.fail("n=" + std::to_string(n) + ": " + std::to_string(logical) + " ciphertexts");
      if (static_cast<double>(logical * params.blck_bits) != analytic) o.fail("analytical bits differ");
      // 32 framing bytes per ciphertext, 4-byte OPE values, 2 bitmap bytes per 8 users.
      auto wire = n * (32 + 4) + 32 + 2 * ((n + 7) / 8);
      if (r.comm.sensing_bytes() != wire) o.fail("n=" + std::to_string(n) + ": wire bytes differ");
    }
  }
  for (std::size_t n = 2; n <= 500; ++n) {
    params.n = n;
    auto lp = analytical_cost(Scheme::kLp3pss, params).comm_bits;
    if (!(lp < analytical_cost(Scheme::kPpss, params).comm_bits) ||
        !(lp < analytical_cost(Scheme::kPdaft, params).comm_bits)) {
      o.fail("ordering fails at n=" + std::to_string(n));
    }
  }
  if (o.pass) o.detail = "n+1 ciphertexts for n in {10,100,500}; bytes = n(32+W)+32+2ceil(n/8); ordering holds for n=2..500";
  return o;
}

// 5. Leakage verdicts on honest runs and on protocol mutants.
Outcome leakage() {
  Outcome o;
  auto rng = make_stream(555, 9);
  std::size_t simultaneous = 0, false_verdicts = 0;
  for (int i = 0; i < 200; ++i) {
    auto n = std::uniform_int_distribution<std::size_t>(2, 30)(rng);
    auto rounds = std::uniform_int_distribution<std::uint64_t>(2, 8)(rng);
    auto cfg = base(n, rounds, rng());
    cfg.churn = {.mu = std::uniform_real_distribution<double>(0.0, 0.8)(rng), .joins = {0, 3}, .leaves = {0, 3}};
    cfg.sensing.miss_probability = (i % 3 == 0) ? 0.1 : 0.0;
    auto run = run_simulation(cfg);
    for (const auto& r : run.report.rounds) simultaneous += !r.joins.empty() && !r.leaves.empty();
    if (!run.report.leakage.ok()) {
      ++false_verdicts;
      o.fail("honest run " + std::to_string(i) + ": " + run.report.leakage.violations[0].reason);
    }
  }
  std::size_t caught = 0;
  for (auto m : kAllMutants) {
    SessionParams p;
    p.master_seed = master_seed_from(static_cast<std::uint64_t>(m) + 1);
    p.fc.tau = 1500;
    p.fc.profile = {0.1, 0.1};
    Lp3pssSession s(p, {UserId{1}, UserId{2}, UserId{3}, UserId{4}, UserId{5}});
    s.sense(1, {{UserId{1}, 900}, {UserId{2}, 1700}, {UserId{3}, 1500}, {UserId{4}, 10}, {UserId{5}, 3000}});
    s.inject(m, UserId{3});
    auto r = check_leakage(s.transcript());
    if (!r.ok() && !r.entity_ok(mutant_victim_role(m, UserId{3}))) {
      ++caught;
    } else {
      ++false_verdicts;
      o.fail(std::string("mutant not caught: ") + to_string(m));
    }
  }
  if (simultaneous == 0) o.fail("no round with simultaneous joins and leaves");
  if (o.pass) {
    o.detail = "200 honest runs conform (" + std::to_string(simultaneous) + " simultaneous join+leave rounds); " +
               std::to_string(caught) + "/" + std::to_string(std::size(kAllMutants)) + " mutants caught";
  }
  return o;
}

// 6. Lambda hand values and Monte Carlo sweep.
Outcome lambda() {
  Outcome o;
  auto l1 = compute_lambda(10, compute_alpha({0.1, 0.1}));
  auto l2 = compute_lambda(10, compute_alpha({0.1, 0.2}));
  if (l1 != 5 || l2 != 5) o.fail("hand values " + std::to_string(l1) + "," + std::to_string(l2));

  constexpr std::uint64_t kRounds = 10000;
  std::vector<double> total(11, 0.0);
  for (std::size_t lam = 1; lam <= 10; ++lam) {
    auto cfg = base(10, kRounds, 606);
    cfg.sensing.profile = DetectionProfile{0.1, 0.1};
    cfg.sensing.reputation = false;
    cfg.sensing.lambda_override = lam;
    auto rates = estimate_error_rates(run_simulation(cfg).report);
    total[lam] = rates.false_alarm.value + rates.missed.value;
  }
  std::size_t argmin = 1;
  for (std::size_t lam = 2; lam <= 10; ++lam) {
    if (total[lam] < total[argmin]) argmin = lam;
  }
  double best_other = 1e9;
  for (std::size_t lam = 1; lam <= 10; ++lam) {
    if (lam != l1) best_other = std::min(best_other, total[lam]);
  }
  auto diff = argmin > l1 ? argmin - l1 : l1 - argmin;
  if (diff > 1) o.fail("empirical argmin " + std::to_string(argmin) + " vs lambda_opt " + std::to_string(l1));
  if (total[l1] > best_other + 0.01) o.fail("Q_f+Q_m at lambda_opt exceeds best alternative by more than 0.01");
  char buf[160];
  std::snprintf(buf, sizeof buf, "lambda_opt=5, empirical argmin=%zu, Q_f+Q_m: %.4f at 5 vs %.4f best other",
                argmin, total[l1], best_other);
  if (o.pass) o.detail = buf;
  return o;
}

// 7. Unit-weight fuse_votes against the plain count rule on every bit vector.
Outcome fusion_equivalence() {
  Outcome o;
  std::uint64_t cases = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> ones(n, 1.0);
    std::vector<std::uint8_t> bits(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) bits[i] = (mask >> i) & 1u;
      auto count = static_cast<std::size_t>(std::popcount(mask));
      for (std::size_t lam = 1; lam <= n; ++lam, ++cases) {
        bool busy = fuse_votes(ones, bits, lam).decision == Decision::kBusy;
        if (busy != (count >= lam)) ++mismatches;
      }
    }
  }
  o.detail = std::to_string(cases) + " (n, vector, lambda) cases, " + std::to_string(mismatches) + " mismatches";
  if (mismatches) o.pass = false;
  return o;
}

// 8. One always-flip user among ten, twenty seeds.
Outcome reputation() {
  Outcome o;
  double worst_adv = 0.0, worst_honest = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto cfg = base(10, 100, 1000 + seed);
    UserId adv{static_cast<std::uint32_t>(1 + seed % 10)};
    cfg.adversary[adv] = Behavior::always_flip();
    auto run = run_simulation(cfg);
    const auto& rep = run.report.final_reputation;
    double adv_phi = rep.at(adv).credibility, adv_w = rep.at(adv).weight;
    worst_adv = std::max(worst_adv, adv_phi);
    if (adv_phi >= 0.2) o.fail("seed " + std::to_string(seed) + ": adversary phi " + std::to_string(adv_phi));
    for (const auto& [u, r] : rep) {
      if (u == adv) continue;
      worst_honest = std::min(worst_honest, r.credibility);
      if (r.credibility <= 0.5) o.fail("seed " + std::to_string(seed) + ": honest phi " + std::to_string(r.credibility));
      if (r.weight <= adv_w) o.fail("seed " + std::to_string(seed) + ": adversary weight not the strict minimum");
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "20 seeds: max adversary phi %.3f, min honest phi %.3f", worst_adv, worst_honest);
  if (o.pass) o.detail = buf;
  return o;
}

// 9. DLP and SRLP oracles on both schemes.
Outcome attacks() {
  Outcome o;
  auto rng = make_stream(909, 1);
  int ok = 0;
  for (int i = 0; i < 50; ++i) {
    auto n = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
    auto seed = rng();
    auto b = run_attack_scenario(AttackScheme::kBaseline, n, seed);
    auto l = run_attack_scenario(AttackScheme::kLp3pss, n, seed);
    if (b.recovered != b.target_rss) o.fail("baseline scenario " + std::to_string(i) + ": DLP did not recover RSS");
    if (b.exposed.size() != n) o.fail("baseline scenario " + std::to_string(i) + ": SRLP exposure incomplete");
    if (l.recovered) o.fail("lp3pss scenario " + std::to_string(i) + ": DLP recovered a value");
    if (!l.exposed.empty()) o.fail("lp3pss scenario " + std::to_string(i) + ": SRLP exposed users");
    ok += b.expected() && l.expected();
  }
  if (o.pass) o.detail = std::to_string(ok) + "/50 scenarios: baseline falls to both, LP-3PSS to neither";
  return o;
}

// 10. Two CLI runs with churn produce identical bytes.
Outcome determinism() {
  Outcome o;
  auto dir = std::filesystem::temp_directory_path() / "lp3pss_acceptance";
  std::filesystem::create_directories(dir);
  auto cfg = dir / "churn.json";
  std::ofstream(cfg) << R"({"sensing": {"n": 20, "rounds": 50, "miss_probability": 0.05},
                            "churn": {"mu": 0.4, "joins": [0, 3], "leaves": [0, 3]},
                            "adversary": {"users": {"U4": {"kind": "random-flip", "p": 0.3}}}})";
  auto run = [&](const std::string& tag) {
    auto report = (dir / ("r" + tag + ".json")).string();
    auto transcript = (dir / ("t" + tag + ".jsonl")).string();
    std::vector<std::string> args{"lp3pss_cli", "simulate",   "--config",    cfg.string(), "--seed",
                                  "31337",      "--out",      report,        "--transcript", transcript};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) o.fail("simulate exited " + std::to_string(code) + ": " + err.str());
    auto slurp = [](const std::string& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    return std::pair{slurp(report), slurp(transcript)};
  };
  auto a = run("1");
  auto b = run("2");
  if (a.first.empty() || a.second.empty()) o.fail("empty output");
  if (a.first != b.first) o.fail("reports differ");
  if (a.second != b.second) o.fail("transcripts differ");
  if (a.first.find("\"churn\": true") == std::string::npos) o.fail("no churn occurred");
  if (o.pass) {
    o.detail = "report " + std::to_string(a.first.size()) + " bytes, transcript " + std::to_string(a.second.size()) +
               " bytes, identical across runs";
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
    double budget_s;  // 0 = no runtime bound
  };
  const Criterion criteria[] = {
      {1, "OPE correctness", ope_correctness, 60},
      {2, "Comparison bit correctness", bit_correctness, 0},
      {3, "Computational overhead conformance", computation_counts, 0},
      {4, "Communication overhead conformance", communication_counts, 0},
      {5, "Leakage conformance", leakage, 0},
      {6, "Voting threshold and optimality", lambda, 120},
      {7, "Fusion equivalence", fusion_equivalence, 0},
      {8, "Reputation robustness", reputation, 0},
      {9, "DLP/SRLP oracles", attacks, 0},
      {10, "Determinism", determinism, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.fail("took " + std::to_string(secs) + " s, budget " + std::to_string(c.budget_s) + " s");
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2fs", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " -- " << o.detail << " ["
              << timing << "]" << std::endl;
    failures += !o.pass;
  }
  std::cout << (failures ? "FAILED: " : "ALL PASSED: ") << (std::size(criteria) - failures) << "/"
            << std::size(criteria) << " criteria" << std::endl;
  return failures ? 1 : 0;
}
