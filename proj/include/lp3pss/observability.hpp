#pragma once

// Leakage verification over per-entity views, the aggregation baseline used as an
// attack target, and the SRLP / DLP attack oracles.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lp3pss/errors.hpp"
#include "lp3pss/ids.hpp"
#include "lp3pss/transcript.hpp"

namespace lp3pss {

struct LeakageViolation {
  EntityId entity;
  ViewEvent event;
  std::string reason;
};

struct LeakageReport {
  std::map<EntityId, bool> conforms;  // per entity
  std::vector<LeakageViolation> violations;

  bool ok() const { return violations.empty(); }
  bool entity_ok(EntityId e) const {
    auto it = conforms.find(e);
    return it != conforms.end() && it->second;
  }
};

namespace detail {

inline bool pair_includes(const std::string& pair, EntityId e) {
  auto bar = pair.find('|');
  if (bar == std::string::npos) return false;
  auto self = e.str();
  return pair.substr(0, bar) == self || pair.substr(bar + 1) == self;
}

// Why an event is outside what its observer may learn; empty when allowed.
inline std::string leakage_reason(const ViewEvent& e) {
  const auto who = e.entity;
  switch (e.tag) {
    case ViewTag::kOpaqueCiphertext:
      return {};
    case ViewTag::kKeyMaterial:
      if (!detail::pair_includes(e.pair, who)) return "holds key material of foreign pair '" + e.pair + "'";
      if (who.role == Role::kGateway && e.label == "key:ope") return "gateway holds an OPE key";
      return {};
    case ViewTag::kPlaintextValue:
      if (e.label == "tau") return "observes the energy threshold";
      if (who.is_user() && e.label == "rss" && e.subject && *e.subject == who.user_id() &&
          e.direction == Direction::kLocal) {
        return {};
      }
      return "observes plaintext value '" + e.label + "'" +
             (e.subject ? " of " + EntityId::user(*e.subject).str() : std::string{});
    case ViewTag::kPlaintextBit:
      if (who.role == Role::kFusionCenter) return {};
      if (who.role == Role::kGateway && e.direction == Direction::kLocal) return {};
      return "observes comparison bits";
    case ViewTag::kOpeOrderPair:
      if (who.role == Role::kGateway) return {};
      return "observes an OPE ciphertext";
  }
  return "unknown tag";
}

}  // namespace detail

// Checks that each view holds only what the history lists allow:
//  users: opaque frames, own RSS and own keys;
//  FC: opaque frames, decision bits and own keys;
//  GW: opaque frames, OPE pairs, the bits it produced and own channel keys.
// Throws IncompleteTranscript when FC, GW or every user is missing, or when a
// transferred frame is not logged at both ends.
inline LeakageReport check_leakage(const std::map<EntityId, ViewLog>& logs) {
  if (!logs.contains(EntityId::fusion_center()) || !logs.contains(EntityId::gateway())) {
    throw IncompleteTranscript("transcript lacks the FC or GW view");
  }
  if (std::none_of(logs.begin(), logs.end(), [](const auto& kv) { return kv.first.is_user(); })) {
    throw IncompleteTranscript("transcript lacks every user view");
  }
  bool any_sensing = false;
  std::map<std::uint64_t, std::pair<int, int>> frames;  // message id -> (sends, receives)
  for (const auto& [who, log] : logs) {
    for (const auto& e : log.events) {
      if (e.tag != ViewTag::kOpaqueCiphertext || !e.message_id) continue;
      if (e.direction == Direction::kSend) ++frames[*e.message_id].first;
      if (e.direction == Direction::kReceive) ++frames[*e.message_id].second;
      if (e.label == "decision_vec") any_sensing = true;
    }
  }
  if (!any_sensing) throw IncompleteTranscript("transcript holds no complete sensing round");
  for (const auto& [id, counts] : frames) {
    if (counts.first != 1 || counts.second != 1) {
      throw IncompleteTranscript("message " + std::to_string(id) + " is not logged exactly once at each end");
    }
  }

  LeakageReport report;
  for (const auto& [who, log] : logs) {
    bool ok = true;
    for (const auto& e : log.events) {
      auto reason = detail::leakage_reason(e);
      if (!reason.empty()) {
        ok = false;
        report.violations.push_back({who, e, who.str() + " " + reason + " (round " + std::to_string(e.round) + ")"});
      }
    }
    report.conforms[who] = ok;
  }
  return report;
}

inline LeakageReport check_leakage(const Transcript& tx) { return check_leakage(tx.view_logs()); }

// Users whose RSS plaintext appears in some other entity's view.
inline std::set<UserId> srlp_exposure(const std::map<EntityId, ViewLog>& logs) {
  std::set<UserId> exposed;
  for (const auto& [who, log] : logs) {
    for (const auto& e : log.events) {
      if (e.tag != ViewTag::kPlaintextValue || e.label != "rss" || !e.subject) continue;
      if (who == EntityId::user(*e.subject)) continue;
      exposed.insert(*e.subject);
    }
  }
  return exposed;
}

// ---------------------------------------------------------------------------
// Aggregation baseline: users send plaintext RSS to the FC, which averages them
// against tau. It exists only as an attack target and error-rate comparator.

struct BaselineRound {
  std::uint64_t round = 0;
  std::set<UserId> roster;
  std::uint64_t rss_sum = 0;
};

struct BaselineAggTranscript {
  std::vector<BaselineRound> rounds;

  const BaselineRound* find(std::uint64_t round) const {
    for (const auto& r : rounds) {
      if (r.round == round) return &r;
    }
    return nullptr;
  }
};

struct BaselineReport {
  UserId user;
  std::uint64_t rss = 0;
};

// One baseline sensing round at the transcript's current round; returns busy/free
// by comparing the average report against tau.
inline bool run_baseline_round(Transcript& tx, std::span<const BaselineReport> reports, std::uint64_t tau) {
  std::uint64_t sum = 0;
  for (const auto& r : reports) {
    auto id = tx.next_message_id();
    tx.log_transfer(EntityId::user(r.user), EntityId::fusion_center(), id, 8, "plain_report");
    ViewEvent own;
    own.entity = EntityId::user(r.user);
    own.direction = Direction::kLocal;
    own.tag = ViewTag::kPlaintextValue;
    own.label = "rss";
    own.subject = r.user;
    own.value = r.rss;
    own.size_bytes = 8;
    tx.record(own);
    ViewEvent seen = own;
    seen.entity = EntityId::fusion_center();
    seen.direction = Direction::kReceive;
    seen.peer = EntityId::user(r.user);
    seen.message_id = id;
    tx.record(seen);
    sum += r.rss;
  }
  ViewEvent agg;
  agg.entity = EntityId::fusion_center();
  agg.direction = Direction::kLocal;
  agg.tag = ViewTag::kPlaintextValue;
  agg.label = "rss_sum";
  agg.value = sum;
  agg.size_bytes = 8;
  tx.record(agg);
  if (reports.empty()) return false;
  return static_cast<double>(sum) / static_cast<double>(reports.size()) >= static_cast<double>(tau);
}

// Rebuilds per-round aggregates from whatever views contain one. LP-3PSS views
// contain none, so the result is empty for them.
inline BaselineAggTranscript extract_aggregates(const std::map<EntityId, ViewLog>& logs) {
  std::map<std::uint64_t, BaselineRound> rounds;
  for (const auto& [who, log] : logs) {
    for (const auto& e : log.events) {
      if (e.tag != ViewTag::kPlaintextValue) continue;
      if (e.label == "rss_sum" && e.value) {
        auto& r = rounds[e.round];
        r.round = e.round;
        r.rss_sum = *e.value;
      }
    }
  }
  for (const auto& [who, log] : logs) {
    for (const auto& e : log.events) {
      if (e.tag == ViewTag::kPlaintextValue && e.label == "rss" && e.subject && who != EntityId::user(*e.subject)) {
        if (auto it = rounds.find(e.round); it != rounds.end()) it->second.roster.insert(*e.subject);
      }
    }
  }
  BaselineAggTranscript t;
  for (auto& [round, r] : rounds) t.rounds.push_back(std::move(r));
  return t;
}

// |sum_before - sum_after| when the rosters differ by exactly the target; nullopt
// when other users changed too (only their joint sum is determined).
inline std::optional<std::uint64_t> dlp_attack_oracle(const BaselineRound& before, const BaselineRound& after,
                                                      UserId target) {
  std::set<UserId> diff;
  std::set_symmetric_difference(before.roster.begin(), before.roster.end(), after.roster.begin(), after.roster.end(),
                                std::inserter(diff, diff.end()));
  if (!diff.contains(target)) throw InvalidArgument("target is not a joining or leaving user");
  if (diff.size() != 1) return std::nullopt;
  return before.rss_sum > after.rss_sum ? before.rss_sum - after.rss_sum : after.rss_sum - before.rss_sum;
}

// Runs the oracle on whatever aggregates the views expose around a membership boundary.
inline std::optional<std::uint64_t> dlp_attack_oracle(const std::map<EntityId, ViewLog>& logs,
                                                      std::uint64_t round_before, std::uint64_t round_after,
                                                      UserId target) {
  auto agg = extract_aggregates(logs);
  const auto* before = agg.find(round_before);
  const auto* after = agg.find(round_after);
  if (!before || !after) return std::nullopt;
  return dlp_attack_oracle(*before, *after, target);
}

}  // namespace lp3pss
