#pragma once

// Deterministic round-based driver: initialization once, then `rounds` sensing
// periods with churn applied between periods.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lp3pss/config.hpp"
#include "lp3pss/observability.hpp"
#include "lp3pss/scenario.hpp"
#include "lp3pss/session.hpp"

namespace lp3pss {

struct RoundRecord {
  std::uint64_t round = 0;
  Hypothesis truth = Hypothesis::kAbsent;
  std::optional<Decision> decision;
  bool aborted = false;
  std::size_t lambda = 0;
  double vote_sum = 0.0;
  std::size_t n_live = 0;
  std::size_t reports_sent = 0;
  std::size_t n_present = 0;
  bool churn = false;  // R(t)
  std::vector<UserId> joins;
  std::vector<UserId> leaves;
  std::size_t beta = 0;
  std::vector<UserId> roster;
  std::map<UserId, std::uint64_t> reported_rss;  // driver-side ground truth, never in a view
  std::vector<PresentBit> bits;                   // as decoded by FC
  std::map<EntityId, OpCounts> ops;
  CommCounts comm;
  std::map<UserId, double> credibility;  // after the round's update
};

struct SimulationReport {
  SimulationConfig config;
  std::uint64_t tau = 0;
  DetectionProfile profile;
  double alpha = 0.0;
  std::size_t initial_lambda = 0;
  std::vector<RoundRecord> rounds;
  ReputationTable final_reputation;
  std::map<EntityId, OpCounts> init_ops;
  LeakageReport leakage;
  std::vector<std::string> diagnostics;
};

struct SimulationRun {
  SimulationReport report;
  Transcript transcript;
};

namespace stream {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kRss = 2;
inline constexpr std::uint64_t kMalice = 3;
inline constexpr std::uint64_t kChurn = 4;
inline constexpr std::uint64_t kMissing = 5;
}  // namespace stream

inline SessionParams session_params(const SimulationConfig& cfg) {
  SessionParams p;
  p.master_seed = master_seed_from(cfg.seed());
  p.ope = OpeParams{cfg.crypto.domain_bits, cfg.crypto.range_bits};
  p.fc.tau = cfg.tau();
  p.fc.profile = cfg.profile();
  p.fc.reputation = cfg.sensing.reputation;
  p.fc.lambda_override = cfg.sensing.lambda_override;
  return p;
}

inline SimulationRun run_simulation(SimulationConfig cfg) {
  cfg.channel.quantization.domain_bits = cfg.crypto.domain_bits;
  cfg.validate();

  std::vector<UserId> initial;
  for (std::size_t i = 1; i <= cfg.sensing.n; ++i) initial.push_back(UserId{static_cast<std::uint32_t>(i)});
  Lp3pssSession session(session_params(cfg), initial);
  UserId next_id{static_cast<std::uint32_t>(cfg.sensing.n + 1)};

  auto truth_rng = make_stream(cfg.seed(), stream::kTruth);
  auto rss_rng = make_stream(cfg.seed(), stream::kRss);
  auto malice_rng = make_stream(cfg.seed(), stream::kMalice);
  auto churn_rng = make_stream(cfg.seed(), stream::kChurn);
  auto miss_rng = make_stream(cfg.seed(), stream::kMissing);
  std::bernoulli_distribution busy(cfg.sensing.p_busy);
  std::bernoulli_distribution missing(cfg.sensing.miss_probability);

  SimulationReport report;
  report.tau = cfg.tau();
  report.profile = cfg.profile();
  report.alpha = session.fusion_center().alpha();
  report.initial_lambda = session.fusion_center().lambda();
  report.init_ops = session.transcript().ops_in_round(0);

  for (std::uint64_t t = 1; t <= cfg.sensing.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    if (t > 1) {
      auto ev = churn_step(cfg.churn, churn_rng, session.live(), next_id);
      if (ev.occurred) {
        auto change = session.membership(t, ev.joins, ev.leaves);
        rec.churn = true;
        rec.joins = change.joined;
        rec.leaves = change.left;
        rec.beta = change.beta;
      }
    }
    rec.truth = busy(truth_rng) ? Hypothesis::kPresent : Hypothesis::kAbsent;
    auto live = session.live();
    rec.roster.assign(live.begin(), live.end());
    rec.n_live = live.size();
    auto draws = generate_rss(cfg.channel, rec.truth, rss_rng, live.size());
    std::map<UserId, std::uint64_t> reports;
    std::size_t k = 0;
    for (auto u : live) {
      auto value = apply_malice(cfg.adversary, u, draws[k++], cfg.channel, malice_rng);
      bool miss = cfg.sensing.miss_probability > 0.0 && missing(miss_rng);
      if (!miss) reports[u] = value;
    }
    rec.reported_rss = reports;

    auto outcome = session.sense(t, reports);
    rec.reports_sent = outcome.reports_sent;
    rec.aborted = outcome.aborted;
    if (outcome.decision) {
      rec.decision = outcome.decision->decision;
      rec.lambda = outcome.decision->lambda;
      rec.vote_sum = outcome.decision->vote_sum;
      rec.n_present = outcome.decision->present;
      rec.bits = outcome.decision->bits;
    }
    rec.ops = session.transcript().ops_in_round(t);
    rec.comm = session.transcript().comm_in_round(t);
    for (const auto& [u, r] : session.fusion_center().reputation()) rec.credibility[u] = r.credibility;
    report.rounds.push_back(std::move(rec));
  }

  report.final_reputation = session.fusion_center().reputation();
  report.leakage = check_leakage(session.transcript());
  for (const auto& d : session.gateway().diagnostics()) report.diagnostics.push_back("GW: " + d);
  for (const auto& d : session.fusion_center().diagnostics()) report.diagnostics.push_back("FC: " + d);
  report.config = std::move(cfg);
  return SimulationRun{std::move(report), std::move(session.transcript())};
}

}  // namespace lp3pss
