#include <gtest/gtest.h>

#include <sstream>

#include "lp3pss/attacks.hpp"
#include "lp3pss/observability.hpp"
#include "lp3pss/session.hpp"

using namespace lp3pss;

namespace {

SessionParams params(std::uint64_t seed = 1) {
  SessionParams p;
  p.master_seed = master_seed_from(seed);
  p.fc.tau = 1500;
  p.fc.profile = {0.1, 0.1};
  return p;
}

std::vector<UserId> users(std::uint32_t n) {
  std::vector<UserId> v;
  for (std::uint32_t i = 1; i <= n; ++i) v.push_back(UserId{i});
  return v;
}

std::map<UserId, std::uint64_t> reports_for(const std::set<UserId>& live, std::uint64_t round) {
  std::map<UserId, std::uint64_t> m;
  for (auto u : live) m[u] = (u.value * 397 + round * 131) % 3000;
  return m;
}

std::set<UserId> all_users(std::uint32_t n) {
  auto v = users(n);
  return {v.begin(), v.end()};
}

}  // namespace

TEST(Leakage, HonestRunConformsEverywhere) {
  Lp3pssSession s(params(), users(10));
  for (std::uint64_t t = 1; t <= 20; ++t) s.sense(t, reports_for(s.live(), t));
  auto r = check_leakage(s.transcript());
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.conforms.size(), 12u);
  for (const auto& [who, ok] : r.conforms) EXPECT_TRUE(ok) << who.str();
}

TEST(Leakage, HonestRunWithChurnConforms) {
  Lp3pssSession s(params(2), users(6));
  s.sense(1, reports_for(s.live(), 1));
  std::vector<UserId> joins{UserId{7}, UserId{8}}, leaves{UserId{1}, UserId{3}};
  s.membership(2, joins, leaves);
  s.sense(2, reports_for(s.live(), 2));
  EXPECT_TRUE(check_leakage(s.transcript()).ok());
}

TEST(Leakage, EachMutantViolatesAtItsVictim) {
  for (auto m : kAllMutants) {
    Lp3pssSession s(params(3), users(4));
    s.sense(1, reports_for(s.live(), 1));
    s.inject(m, UserId{2});
    auto r = check_leakage(s.transcript());
    EXPECT_FALSE(r.ok()) << to_string(m);
    auto victim = mutant_victim_role(m, UserId{2});
    EXPECT_FALSE(r.entity_ok(victim)) << to_string(m) << " at " << victim.str();
  }
}

TEST(Leakage, GatewayForwardingOpeViolatesAtFc) {
  Lp3pssSession s(params(), users(3));
  s.sense(1, reports_for(s.live(), 1));
  s.inject(Mutant::kGatewayForwardsOpe, UserId{1});
  auto r = check_leakage(s.transcript());
  EXPECT_FALSE(r.entity_ok(EntityId::fusion_center()));
  EXPECT_TRUE(r.entity_ok(EntityId::gateway()));
}

TEST(Leakage, TauInInitPayloadViolatesAtGateway) {
  Lp3pssSession s(params(), users(3));
  s.sense(1, reports_for(s.live(), 1));
  s.inject(Mutant::kFcLeaksTauToGateway, UserId{1});
  auto r = check_leakage(s.transcript());
  EXPECT_FALSE(r.entity_ok(EntityId::gateway()));
  EXPECT_TRUE(r.entity_ok(EntityId::fusion_center()));
}

TEST(Leakage, IncompleteTranscriptsAreRejected) {
  EXPECT_THROW(check_leakage(std::map<EntityId, ViewLog>{}), IncompleteTranscript);

  Lp3pssSession init_only(params(), users(2));
  EXPECT_THROW(check_leakage(init_only.transcript()), IncompleteTranscript);

  Lp3pssSession s(params(), users(2));
  s.sense(1, reports_for(s.live(), 1));
  auto logs = s.transcript().view_logs();
  auto& gw = logs.at(EntityId::gateway()).events;
  auto it = std::find_if(gw.begin(), gw.end(), [](const ViewEvent& e) {
    return e.tag == ViewTag::kOpaqueCiphertext && e.direction == Direction::kReceive;
  });
  ASSERT_NE(it, gw.end());
  gw.erase(it);
  EXPECT_THROW(check_leakage(logs), IncompleteTranscript);

  auto no_users = s.transcript().view_logs();
  for (auto u : all_users(2)) no_users.erase(EntityId::user(u));
  EXPECT_THROW(check_leakage(no_users), IncompleteTranscript);
}

TEST(Leakage, EveryFrameLoggedAtBothEnds) {
  Lp3pssSession s(params(4), users(5));
  for (std::uint64_t t = 1; t <= 3; ++t) s.sense(t, reports_for(s.live(), t));
  std::map<std::uint64_t, std::pair<EntityId, EntityId>> ends;
  std::map<std::uint64_t, int> seen;
  for (const auto& e : s.transcript().events()) {
    if (e.tag != ViewTag::kOpaqueCiphertext) continue;
    ASSERT_TRUE(e.message_id);
    ASSERT_TRUE(e.peer);
    ++seen[*e.message_id];
    if (e.direction == Direction::kSend) {
      ends[*e.message_id].first = e.entity;
    } else {
      ends[*e.message_id].second = e.entity;
    }
  }
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 2) << id;
  for (const auto& [id, e] : ends) EXPECT_NE(e.first, e.second);
}

TEST(Leakage, CountersMatchLoggedFrames) {
  Lp3pssSession s(params(5), users(6));
  s.sense(1, reports_for(s.live(), 1));
  std::vector<UserId> joins{UserId{7}};
  s.membership(2, joins, {});
  s.sense(2, reports_for(s.live(), 2));
  std::uint64_t sends = 0, recvs = 0, enc = 0, dec = 0;
  for (const auto& e : s.transcript().events()) {
    if (e.tag == ViewTag::kOpaqueCiphertext) (e.direction == Direction::kSend ? sends : recvs) += 1;
  }
  for (const auto& [who, c] : s.transcript().op_totals()) {
    enc += c.total().aead_enc;
    dec += c.total().aead_dec;
  }
  EXPECT_EQ(enc, sends);
  EXPECT_EQ(dec, recvs);
}

TEST(Leakage, GatewayViewDependsOnlyOnComparisonOutcomes) {
  std::map<UserId, std::uint64_t> a{{UserId{1}, 10}, {UserId{2}, 1600}, {UserId{3}, 1499}, {UserId{4}, 1500}};
  std::map<UserId, std::uint64_t> b{{UserId{1}, 1200}, {UserId{2}, 60000}, {UserId{3}, 0}, {UserId{4}, 2500}};
  auto gw_view = [](const std::map<UserId, std::uint64_t>& rss) {
    Lp3pssSession s(params(6), users(4));
    s.sense(1, rss);
    std::vector<std::tuple<ViewTag, Direction, std::string, std::uint64_t, std::string>> shape;
    for (const auto& e : s.transcript().view_logs().at(EntityId::gateway()).events) {
      shape.emplace_back(e.tag, e.direction, e.label, e.size_bytes, e.bits);
    }
    return shape;
  };
  EXPECT_EQ(gw_view(a), gw_view(b));
}

TEST(Leakage, RepeatedOpeValueAcrossRoundsIsAllowed) {
  Lp3pssSession s(params(), users(2));
  s.sense(1, {{UserId{1}, 42}, {UserId{2}, 42}});
  s.sense(2, {{UserId{1}, 42}, {UserId{2}, 42}});
  EXPECT_TRUE(check_leakage(s.transcript()).ok());
}

TEST(Srlp, BaselineExposesEveryReporter) {
  Transcript tx;
  tx.set_clock(1, Phase::kSensing);
  std::vector<BaselineReport> reports;
  for (std::uint32_t i = 1; i <= 5; ++i) reports.push_back({UserId{i}, 1000u + i});
  run_baseline_round(tx, reports, 1500);
  EXPECT_EQ(srlp_exposure(tx.view_logs()), all_users(5));
}

TEST(Srlp, Lp3pssExposesNobody) {
  Lp3pssSession s(params(), users(5));
  s.sense(1, reports_for(s.live(), 1));
  EXPECT_TRUE(srlp_exposure(s.transcript().view_logs()).empty());
}

TEST(Srlp, InjectedForeignRssIsDetected) {
  Lp3pssSession s(params(), users(5));
  s.sense(1, reports_for(s.live(), 1));
  auto logs = s.transcript().view_logs();
  ViewEvent e;
  e.round = 1;
  e.entity = EntityId::user({2});
  e.direction = Direction::kReceive;
  e.tag = ViewTag::kPlaintextValue;
  e.label = "rss";
  e.subject = UserId{4};
  e.value = 1234;
  logs.at(EntityId::user({2})).events.push_back(e);
  EXPECT_EQ(srlp_exposure(logs), (std::set<UserId>{UserId{4}}));
}

TEST(Baseline, AveragesAgainstTau) {
  Transcript tx;
  std::vector<BaselineReport> r{{UserId{1}, 1000}, {UserId{2}, 2100}};
  EXPECT_TRUE(run_baseline_round(tx, r, 1550));
  EXPECT_FALSE(run_baseline_round(tx, r, 1551));
  EXPECT_FALSE(run_baseline_round(tx, {}, 0));
}

TEST(Dlp, RecoversDepartingUserFromBaseline) {
  BaselineRound before{1, all_users(4), 1000 + 1234 + 900 + 1700};
  BaselineRound after{2, {UserId{1}, UserId{3}, UserId{4}}, 1000 + 900 + 1700};
  EXPECT_EQ(dlp_attack_oracle(before, after, UserId{2}), 1234u);
  EXPECT_EQ(dlp_attack_oracle(after, before, UserId{2}), 1234u);
}

TEST(Dlp, TwoSimultaneousLeaversAreUnderdetermined) {
  BaselineRound before{1, all_users(4), 4000};
  BaselineRound after{2, {UserId{1}, UserId{4}}, 2000};
  EXPECT_FALSE(dlp_attack_oracle(before, after, UserId{2}));
}

TEST(Dlp, TargetOutsideRosterDifferenceIsRejected) {
  BaselineRound before{1, all_users(3), 3000};
  BaselineRound after{2, {UserId{1}, UserId{2}}, 2000};
  EXPECT_THROW(dlp_attack_oracle(before, after, UserId{1}), InvalidArgument);
}

TEST(Dlp, FrozenBaselineTranscriptRecoversTarget) {
  Transcript tx;
  std::vector<BaselineReport> before{{UserId{1}, 800}, {UserId{2}, 1234}, {UserId{3}, 2100}};
  std::vector<BaselineReport> after{{UserId{1}, 800}, {UserId{3}, 2100}};
  tx.set_clock(1, Phase::kSensing);
  run_baseline_round(tx, before, 1500);
  tx.set_clock(2, Phase::kSensing);
  run_baseline_round(tx, after, 1500);
  EXPECT_EQ(dlp_attack_oracle(tx.view_logs(), 1, 2, UserId{2}), 1234u);
}

TEST(Dlp, Lp3pssTranscriptYieldsNothing) {
  auto r = run_attack_scenario(AttackScheme::kLp3pss, 6, 11);
  EXPECT_FALSE(r.recovered);
  EXPECT_TRUE(r.exposed.empty());
  EXPECT_TRUE(r.expected());
  auto b = run_attack_scenario(AttackScheme::kBaseline, 6, 11);
  EXPECT_EQ(b.recovered, b.target_rss);
  EXPECT_EQ(b.exposed.size(), 6u);
}

TEST(TranscriptIo, JsonLinesRoundTrip) {
  Lp3pssSession s(params(), users(3));
  s.sense(1, reports_for(s.live(), 1));
  s.inject(Mutant::kFcSharesOpeKeyWithGateway, UserId{1});
  std::stringstream buf;
  s.transcript().write_jsonl(buf);
  auto back = Transcript::read_jsonl(buf);
  EXPECT_EQ(back, s.transcript().events());

  std::istringstream first_line(buf.str().substr(0, buf.str().find('\n')));
  auto j = nlohmann::json::parse(first_line.str());
  for (const char* k : {"round", "entity", "direction", "tag", "size_bytes", "meta"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(TranscriptIo, MalformedLinesAreRejected) {
  std::istringstream bad_json("{not json\n");
  EXPECT_THROW(Transcript::read_jsonl(bad_json), MalformedInput);
  std::istringstream bad_tag(
      R"({"round":1,"entity":"GW","direction":"recv","tag":"SECRET","size_bytes":1,"meta":{}})"
      "\n");
  EXPECT_THROW(Transcript::read_jsonl(bad_tag), MalformedInput);
  std::istringstream bad_entity(
      R"({"round":1,"entity":"XX","direction":"recv","tag":"PLAINTEXT_BIT","size_bytes":1,"meta":{}})"
      "\n");
  EXPECT_THROW(Transcript::read_jsonl(bad_entity), MalformedInput);
}
