#pragma once

// A complete LP-3PSS deployment (key table, FC, GW, users) wired to one transcript.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lp3pss/crypto.hpp"
#include "lp3pss/entities.hpp"
#include "lp3pss/transcript.hpp"

namespace lp3pss {

struct SessionParams {
  MasterSeed master_seed{};
  OpeParams ope;
  FusionCenterConfig fc;
};

struct SensingOutcome {
  std::size_t reports_sent = 0;
  std::optional<RoundDecision> decision;  // empty when aborted or nobody was present
  bool aborted = false;                   // decision vector failed authentication
};

// Deviations from the protocol, used to confirm that leakage checks catch them.
enum class Mutant : std::uint8_t {
  kGatewayForwardsOpe,         // GW passes OPE(RSS_i) on to FC
  kFcLeaksTauToGateway,        // FC puts tau in plaintext into an INIT-style payload
  kUserSendsPlainRssToGateway, // U_i reports RSS_i unencrypted to GW
  kFcSendsTauToUser,           // FC reveals tau to a user
  kFcSharesOpeKeyWithGateway,  // FC hands k_FC,i (OPE part) to GW
  kGatewaySendsBitsToUser,     // GW reveals the bit vector to a user
  kUserSendsPlainRssToFc,      // U_i reports RSS_i unencrypted to FC
};

inline constexpr Mutant kAllMutants[] = {
    Mutant::kGatewayForwardsOpe,      Mutant::kFcLeaksTauToGateway,        Mutant::kUserSendsPlainRssToGateway,
    Mutant::kFcSendsTauToUser,        Mutant::kFcSharesOpeKeyWithGateway,  Mutant::kGatewaySendsBitsToUser,
    Mutant::kUserSendsPlainRssToFc,
};

inline const char* to_string(Mutant m) {
  switch (m) {
    case Mutant::kGatewayForwardsOpe:
      return "gw-forwards-ope";
    case Mutant::kFcLeaksTauToGateway:
      return "fc-leaks-tau-to-gw";
    case Mutant::kUserSendsPlainRssToGateway:
      return "su-plain-rss-to-gw";
    case Mutant::kFcSendsTauToUser:
      return "fc-sends-tau-to-su";
    case Mutant::kFcSharesOpeKeyWithGateway:
      return "fc-shares-ope-key";
    case Mutant::kGatewaySendsBitsToUser:
      return "gw-sends-bits-to-su";
    case Mutant::kUserSendsPlainRssToFc:
      return "su-plain-rss-to-fc";
  }
  return "?";
}

// Entity that a mutant's leaked data ends up at.
inline EntityId mutant_victim_role(Mutant m, UserId u) {
  switch (m) {
    case Mutant::kGatewayForwardsOpe:
    case Mutant::kUserSendsPlainRssToFc:
      return EntityId::fusion_center();
    case Mutant::kFcLeaksTauToGateway:
    case Mutant::kUserSendsPlainRssToGateway:
    case Mutant::kFcSharesOpeKeyWithGateway:
      return EntityId::gateway();
    case Mutant::kFcSendsTauToUser:
    case Mutant::kGatewaySendsBitsToUser:
      return EntityId::user(u);
  }
  return EntityId::fusion_center();
}

class Lp3pssSession {
 public:
  // Initialization phase (round 0): keys, c_i for every user, GW threshold cache.
  Lp3pssSession(const SessionParams& params, const std::vector<UserId>& users)
      : keys_(make_keys(params, users, tx_)), fc_(params.fc, keys_, tx_), gw_(keys_, tx_) {
    auto init = fc_init_messages();
    for (auto u : keys_.users()) sus_.emplace(u, SecondaryUser(u, keys_, tx_));
    for (auto& c : init) {
      transmit(tx_, c);
      gw_.receive_init(c, tx_);
    }
  }

  MembershipChange membership(std::uint64_t round, std::span<const UserId> joins, std::span<const UserId> leaves) {
    tx_.set_clock(round, Phase::kMembership);
    auto change = handle_membership(fc_, gw_, joins, leaves, keys_, tx_);
    for (auto u : change.left) sus_.erase(u);
    for (auto u : change.joined) sus_.emplace(u, SecondaryUser(u, keys_, tx_));
    return change;
  }

  // One private sensing period. `rss` holds the users that report this round.
  SensingOutcome sense(std::uint64_t round, const std::map<UserId, std::uint64_t>& rss) {
    tx_.set_clock(round, Phase::kSensing);
    std::vector<ProtocolMessage> reports;
    reports.reserve(rss.size());
    for (const auto& [u, value] : rss) {
      auto it = sus_.find(u);
      if (it == sus_.end()) throw InvalidArgument("U" + std::to_string(u.value) + " is not live");
      auto msg = su_sense_report(it->second, value, tx_);
      transmit(tx_, msg);
      reports.push_back(std::move(msg));
    }
    auto zeta = gw_compare(gw_, reports, tx_);
    transmit(tx_, zeta);
    SensingOutcome out;
    out.reports_sent = reports.size();
    try {
      out.decision = fc_decide(fc_, zeta, tx_);
    } catch (const AuthenticationError&) {
      out.aborted = true;
    }
    return out;
  }

  // Performs one protocol deviation at the current round.
  void inject(Mutant m, UserId u) {
    tx_.set_clock(tx_.round(), Phase::kSensing);
    auto& su = sus_.at(u);
    auto value_bytes = [](std::uint64_t v) {
      Bytes b;
      put_be(b, v, 8);
      return b;
    };
    switch (m) {
      case Mutant::kGatewayForwardsOpe: {
        auto c = gw_.last_reports().at(u);
        auto msg = gw_.send_out_of_protocol(EntityId::fusion_center(), Content::kOpeValue, u,
                                            encode_ope(c, keys_.ope(u).ciphertext_bytes()), tx_);
        deliver(msg);
        break;
      }
      case Mutant::kFcLeaksTauToGateway: {
        auto msg = fc_.send_out_of_protocol(EntityId::gateway(), Content::kPlainThreshold, u,
                                            value_bytes(fc_.config().tau), tx_);
        deliver(msg);
        break;
      }
      case Mutant::kUserSendsPlainRssToGateway: {
        auto msg = su.send_out_of_protocol(EntityId::gateway(), Content::kPlainRss, u,
                                           value_bytes(su.last_rss().value_or(0)), tx_);
        deliver(msg);
        break;
      }
      case Mutant::kFcSendsTauToUser: {
        auto msg = fc_.send_out_of_protocol(EntityId::user(u), Content::kPlainThreshold, u,
                                            value_bytes(fc_.config().tau), tx_);
        deliver(msg);
        break;
      }
      case Mutant::kFcSharesOpeKeyWithGateway: {
        const auto& k = fc_.ope_key(u);
        Bytes payload(k.key_bytes.begin(), k.key_bytes.end());
        auto label = keys_.channel(EntityId::fusion_center(), EntityId::user(u)).label;
        payload.insert(payload.end(), label.begin(), label.end());
        auto msg = fc_.send_out_of_protocol(EntityId::gateway(), Content::kKeyMaterial, u, payload, tx_);
        deliver(msg);
        break;
      }
      case Mutant::kGatewaySendsBitsToUser: {
        DecisionVector v{{1}, {1}};
        auto msg = gw_.send_out_of_protocol(EntityId::user(u), Content::kDecisionBits, u, v.encode(), tx_);
        deliver(msg);
        break;
      }
      case Mutant::kUserSendsPlainRssToFc: {
        auto msg = su.send_out_of_protocol(EntityId::fusion_center(), Content::kPlainRss, u,
                                           value_bytes(su.last_rss().value_or(0)), tx_);
        deliver(msg);
        break;
      }
    }
  }

  Transcript& transcript() { return tx_; }
  const Transcript& transcript() const { return tx_; }
  const KeyTable& keys() const { return keys_; }
  FusionCenter& fusion_center() { return fc_; }
  const FusionCenter& fusion_center() const { return fc_; }
  Gateway& gateway() { return gw_; }
  const Gateway& gateway() const { return gw_; }
  const std::map<UserId, SecondaryUser>& users() const { return sus_; }
  std::set<UserId> live() const { return keys_.users(); }

 private:
  static KeyTable make_keys(const SessionParams& p, const std::vector<UserId>& users, Transcript& tx) {
    tx.set_clock(0, Phase::kInit);
    std::vector<EntityId> ids{EntityId::fusion_center(), EntityId::gateway()};
    for (auto u : users) ids.push_back(EntityId::user(u));
    return derive_pairwise_keys(p.master_seed, ids, p.ope);
  }

  std::vector<ProtocolMessage> fc_init_messages() {
    std::vector<ProtocolMessage> msgs;
    for (auto u : keys_.users()) msgs.push_back(fc_.admit(u, keys_, tx_));
    fc_.recompute_lambda();
    return msgs;
  }

  void deliver(ProtocolMessage& msg) {
    transmit(tx_, msg);
    const auto to = msg.header.receiver;
    if (to == EntityId::fusion_center()) {
      fc_.receive(msg, tx_);
    } else if (to == EntityId::gateway()) {
      gw_.receive(msg, tx_);
    } else {
      sus_.at(to.user_id()).receive(msg, tx_);
    }
  }

  Transcript tx_;
  KeyTable keys_;
  FusionCenter fc_;
  Gateway gw_;
  std::map<UserId, SecondaryUser> sus_;
};

}  // namespace lp3pss
