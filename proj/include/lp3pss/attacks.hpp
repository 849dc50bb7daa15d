#pragma once

// Frozen-scenario SRLP / DLP experiments against the aggregation baseline and
// LP-3PSS. Every user except the target keeps the same RSS on both sides of the
// membership boundary, so any change in an aggregate is the target's report.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lp3pss/observability.hpp"
#include "lp3pss/scenario.hpp"
#include "lp3pss/session.hpp"

namespace lp3pss {

enum class AttackScheme : std::uint8_t { kBaseline, kLp3pss };

inline const char* to_string(AttackScheme s) { return s == AttackScheme::kBaseline ? "baseline" : "lp3pss"; }

struct AttackOutcome {
  AttackScheme scheme = AttackScheme::kBaseline;
  std::size_t n = 0;
  UserId target;
  std::uint64_t target_rss = 0;
  std::optional<std::uint64_t> recovered;  // DLP
  std::set<UserId> exposed;                // SRLP

  // Baseline must fall to both attacks; LP-3PSS must resist both.
  bool expected() const {
    if (scheme == AttackScheme::kBaseline) return recovered == target_rss && exposed.size() == n;
    return !recovered && exposed.empty();
  }
};

inline AttackOutcome run_attack_scenario(AttackScheme scheme, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("attack scenario needs n >= 2");
  auto rng = make_stream(seed, 0xA77AC);
  ChannelModel model;
  std::uniform_int_distribution<std::uint64_t> pick(0, model.quantization.max_value());
  std::map<UserId, std::uint64_t> rss;
  for (std::size_t i = 1; i <= n; ++i) rss[UserId{static_cast<std::uint32_t>(i)}] = pick(rng);
  auto target = UserId{static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(1, n)(rng))};

  AttackOutcome out;
  out.scheme = scheme;
  out.n = n;
  out.target = target;
  out.target_rss = rss.at(target);
  const auto tau = static_cast<std::uint64_t>(model.midpoint());

  if (scheme == AttackScheme::kBaseline) {
    Transcript tx;
    std::vector<BaselineReport> before, after;
    for (const auto& [u, v] : rss) {
      before.push_back({u, v});
      if (u != target) after.push_back({u, v});
    }
    tx.set_clock(1, Phase::kSensing);
    run_baseline_round(tx, before, tau);
    tx.set_clock(2, Phase::kSensing);
    run_baseline_round(tx, after, tau);
    auto logs = tx.view_logs();
    out.recovered = dlp_attack_oracle(logs, 1, 2, target);
    out.exposed = srlp_exposure(logs);
    return out;
  }

  SessionParams params;
  params.master_seed = master_seed_from(seed);
  params.fc.tau = tau;
  params.fc.profile = detection_profile(model, tau);
  std::vector<UserId> users;
  for (const auto& [u, v] : rss) users.push_back(u);
  Lp3pssSession session(params, users);
  session.sense(1, rss);
  std::vector<UserId> leaving{target};
  session.membership(2, {}, leaving);
  auto remaining = rss;
  remaining.erase(target);
  session.sense(2, remaining);
  auto logs = session.transcript().view_logs();
  out.recovered = dlp_attack_oracle(logs, 1, 2, target);
  out.exposed = srlp_exposure(logs);
  return out;
}

}  // namespace lp3pss
