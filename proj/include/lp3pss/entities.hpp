#pragma once

// Secondary users, gateway and fusion center executing the three phases of the
// protocol (initialization, private sensing, membership update).
//
// All crypto goes through Endpoint::seal/open/ope so that every primitive call is
// charged to the transcript's operation ledger exactly once.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lp3pss/bytes.hpp"
#include "lp3pss/crypto.hpp"
#include "lp3pss/errors.hpp"
#include "lp3pss/fusion.hpp"
#include "lp3pss/ids.hpp"
#include "lp3pss/messages.hpp"
#include "lp3pss/transcript.hpp"

namespace lp3pss {

namespace detail {

inline std::uint32_t sender_tag(EntityId e) { return (static_cast<std::uint32_t>(e.role) << 24) | (e.index & 0xffffffu); }

inline std::size_t bitmap_bytes(std::size_t n) { return (n + 7) / 8; }

}  // namespace detail

// Bit vector sent from GW to FC: bitmap then presence mask, MSB first, positions
// in ascending user-id order over the live roster.
struct DecisionVector {
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> present;

  Bytes encode() const {
    auto nb = detail::bitmap_bytes(bits.size());
    Bytes out(2 * nb, 0);
    for (std::size_t k = 0; k < bits.size(); ++k) {
      auto mask = static_cast<std::uint8_t>(0x80u >> (k % 8));
      if (bits[k]) out[k / 8] |= mask;
      if (present[k]) out[nb + k / 8] |= mask;
    }
    return out;
  }

  static DecisionVector decode(ByteView payload, std::size_t n) {
    auto nb = detail::bitmap_bytes(n);
    if (payload.size() != 2 * nb) throw ProtocolError("decision vector has wrong length for roster");
    DecisionVector v;
    v.bits.resize(n);
    v.present.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      auto mask = static_cast<std::uint8_t>(0x80u >> (k % 8));
      v.bits[k] = (payload[k / 8] & mask) ? 1 : 0;
      v.present[k] = (payload[nb + k / 8] & mask) ? 1 : 0;
    }
    return v;
  }

  std::string str() const {
    std::string s;
    for (std::size_t k = 0; k < bits.size(); ++k) s.push_back(present[k] ? (bits[k] ? '1' : '0') : '-');
    return s;
  }
};

// Identity, nonce stream and metered crypto of one protocol participant.
class Endpoint {
 public:
  explicit Endpoint(EntityId id) : id_(id), nonces_(detail::sender_tag(id)) {}

  EntityId id() const { return id_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 protected:
  ProtocolMessage seal(Transcript& tx, const AeadKey& key, MessageHeader header, ByteView payload) {
    header.sender = id_;
    header.round = tx.round();
    tx.count(id_, CryptoOp::kAeadEncrypt);
    ProtocolMessage msg;
    msg.body = aead_encrypt(key, payload, header.associated_data(), nonces_);
    msg.header = header;
    return msg;
  }

  // Decrypts and logs what was learned at this entity. Throws AuthenticationError.
  Bytes open(Transcript& tx, const AeadKey& key, const ProtocolMessage& msg) {
    tx.count(id_, CryptoOp::kAeadDecrypt);
    auto plain = aead_decrypt(key, msg.body, msg.header.associated_data());
    log_plaintext(tx, msg, plain);
    return plain;
  }

  OpeCiphertext ope(Transcript& tx, DefaultOpe& scheme, std::uint64_t m) {
    if (m >= scheme.key().domain_size()) throw InvalidArgument("value outside OPE domain");
    tx.count(id_, CryptoOp::kOpeEncrypt);
    return scheme.encrypt(m);
  }

  void log_key(Transcript& tx, const std::string& pair_label, const char* what) {
    ViewEvent e;
    e.entity = id_;
    e.direction = Direction::kLocal;
    e.tag = ViewTag::kKeyMaterial;
    e.size_bytes = 16;
    e.label = what;
    e.pair = pair_label;
    tx.record(std::move(e));
  }

  void note(std::string what) { diagnostics_.push_back(std::move(what)); }

 private:
  void log_plaintext(Transcript& tx, const ProtocolMessage& msg, const Bytes& plain) {
    ViewEvent e;
    e.entity = id_;
    e.direction = Direction::kReceive;
    e.peer = msg.header.sender;
    e.message_id = msg.id;
    e.size_bytes = plain.size();
    switch (msg.header.content) {
      case Content::kOpeValue:
        e.tag = ViewTag::kOpeOrderPair;
        e.label = msg.header.kind == MessageKind::kInitC    ? "ope_tau"
                  : msg.header.kind == MessageKind::kReport ? "ope_rss"
                                                            : "ope";
        e.subject = msg.header.subject;
        e.value = get_be(plain, std::min<std::size_t>(plain.size(), 8));
        break;
      case Content::kDecisionBits:
        e.tag = ViewTag::kPlaintextBit;
        e.label = "bits";
        e.bits = plain.size() % 2 == 0 ? DecisionVector::decode(plain, plain.size() / 2 * 8).str() : to_hex(plain);
        break;
      case Content::kPlainRss:
      case Content::kPlainThreshold:
        e.tag = ViewTag::kPlaintextValue;
        e.label = msg.header.content == Content::kPlainRss ? "rss" : "tau";
        e.subject = msg.header.subject;
        e.value = get_be(plain, std::min<std::size_t>(plain.size(), 8));
        break;
      case Content::kKeyMaterial:
        e.tag = ViewTag::kKeyMaterial;
        e.label = "key:received";
        e.pair = plain.size() > 16 ? std::string(plain.begin() + 16, plain.end()) : std::string{};
        break;
    }
    tx.record(std::move(e));
  }

  EntityId id_;
  NonceSequence nonces_;
  std::vector<std::string> diagnostics_;
};

// ---------------------------------------------------------------------------

class SecondaryUser : public Endpoint {
 public:
  SecondaryUser(UserId id, const KeyTable& keys, Transcript& tx)
      : Endpoint(EntityId::user(id)),
        user_(id),
        ope_(keys.ope(id)),
        fc_channel_(keys.channel(EntityId::fusion_center(), EntityId::user(id))),
        gw_channel_(keys.channel(EntityId::gateway(), EntityId::user(id))) {
    log_key(tx, fc_channel_.label, "key:ope");
    log_key(tx, fc_channel_.label, "key:channel");
    log_key(tx, gw_channel_.label, "key:channel");
  }

  UserId user() const { return user_; }
  std::optional<std::uint64_t> last_rss() const { return last_rss_; }
  const OpeKey& ope_key() const { return ope_.key(); }
  const AeadKey& gateway_channel() const { return gw_channel_; }
  const AeadKey& fusion_channel() const { return fc_channel_; }

  // sigma_i = E_{k_GW,i}(OPE_{k_FC,i}(RSS_i))
  ProtocolMessage sense_report(std::uint64_t rss_q, Transcript& tx) {
    if (rss_q >= ope_.key().domain_size()) throw InvalidArgument("RSS outside OPE domain");
    last_rss_ = rss_q;
    ViewEvent own;
    own.entity = id();
    own.direction = Direction::kLocal;
    own.tag = ViewTag::kPlaintextValue;
    own.label = "rss";
    own.subject = user_;
    own.value = rss_q;
    own.size_bytes = ope_.key().ciphertext_bytes();
    tx.record(std::move(own));

    auto c = ope(tx, ope_, rss_q);
    MessageHeader h{.receiver = EntityId::gateway(), .kind = MessageKind::kReport, .content = Content::kOpeValue,
                    .subject = user_};
    return seal(tx, gw_channel_, h, encode_ope(c, ope_.key().ciphertext_bytes()));
  }

  // Anything addressed to a user is outside the protocol; it is decrypted and logged.
  void receive(const ProtocolMessage& msg, Transcript& tx) {
    const AeadKey& key = msg.header.sender == EntityId::gateway() ? gw_channel_ : fc_channel_;
    try {
      open(tx, key, msg);
    } catch (const AuthenticationError& e) {
      note(e.what());
    }
  }

  ProtocolMessage send_out_of_protocol(EntityId to, Content content, UserId subject, ByteView payload,
                                       Transcript& tx) {
    MessageHeader h{.receiver = to, .kind = MessageKind::kOutOfProtocol, .content = content, .subject = subject};
    return seal(tx, to == EntityId::gateway() ? gw_channel_ : fc_channel_, h, payload);
  }

  // State that membership changes of other users must not touch.
  struct Snapshot {
    OpeKey ope;
    AeadKey fc;
    AeadKey gw;
    std::optional<std::uint64_t> last_rss;
    bool operator==(const Snapshot&) const = default;
  };
  Snapshot snapshot() const { return {ope_.key(), fc_channel_, gw_channel_, last_rss_}; }

 private:
  UserId user_;
  DefaultOpe ope_;
  AeadKey fc_channel_;
  AeadKey gw_channel_;
  std::optional<std::uint64_t> last_rss_;
};

// ---------------------------------------------------------------------------

class Gateway : public Endpoint {
 public:
  Gateway(const KeyTable& keys, Transcript& tx)
      : Endpoint(EntityId::gateway()), fc_channel_(keys.channel(EntityId::fusion_center(), EntityId::gateway())) {
    log_key(tx, fc_channel_.label, "key:channel");
    for (auto u : keys.users()) admit(u, keys, tx);
  }

  void admit(UserId u, const KeyTable& keys, Transcript& tx) {
    if (user_channels_.contains(u)) throw InvalidArgument("gateway already serves U" + std::to_string(u.value));
    const auto& k = keys.channel(EntityId::gateway(), EntityId::user(u));
    user_channels_.emplace(u, k);
    log_key(tx, k.label, "key:channel");
  }

  void revoke(UserId u) {
    if (!user_channels_.erase(u)) throw InvalidArgument("gateway does not serve U" + std::to_string(u.value));
    tau_cache_.erase(u);
    last_reports_.erase(u);
  }

  // Decrypts c_i once and caches OPE_{k_FC,i}(tau).
  void receive_init(const ProtocolMessage& msg, Transcript& tx) {
    if (msg.header.kind != MessageKind::kInitC || msg.header.sender != EntityId::fusion_center()) {
      throw ProtocolError("expected an INIT_C message from FC");
    }
    auto u = msg.header.subject;
    if (!user_channels_.contains(u)) throw ProtocolError("INIT_C for unknown user U" + std::to_string(u.value));
    auto plain = open(tx, fc_channel_, msg);
    if (plain.empty() || plain.size() > 8) throw ProtocolError("INIT_C payload is not an OPE ciphertext");
    tau_cache_[u] = OpeCiphertext{get_be(plain, plain.size())};
  }

  // b_i = 0 iff OPE(RSS_i) < OPE(tau), else 1; returns zeta = E_{k_FC,GW}(b).
  // Reports that cannot be used leave their position absent and are noted in diagnostics().
  ProtocolMessage compare(std::span<const ProtocolMessage> reports, Transcript& tx) {
    std::map<UserId, OpeCiphertext> received;
    for (const auto& msg : reports) {
      const auto& h = msg.header;
      if (h.kind != MessageKind::kReport || !h.sender.is_user()) {
        note("round " + std::to_string(tx.round()) + ": non-report message from " + h.sender.str() + " skipped");
        continue;
      }
      auto u = h.sender.user_id();
      auto ch = user_channels_.find(u);
      if (ch == user_channels_.end()) {
        note("round " + std::to_string(tx.round()) + ": report from unknown user " + h.sender.str() + " skipped");
        continue;
      }
      if (!tau_cache_.contains(u)) {
        note("round " + std::to_string(tx.round()) + ": no cached threshold for " + h.sender.str());
        continue;
      }
      if (received.contains(u)) {
        note("round " + std::to_string(tx.round()) + ": duplicate report from " + h.sender.str() + " skipped");
        continue;
      }
      if (h.round != tx.round() || h.subject != u) {
        note("round " + std::to_string(tx.round()) + ": stale or mislabelled report from " + h.sender.str());
        continue;
      }
      Bytes plain;
      try {
        plain = open(tx, ch->second, msg);
      } catch (const AuthenticationError& e) {
        note("round " + std::to_string(tx.round()) + ": " + e.what());
        continue;
      }
      if (plain.empty() || plain.size() > 8) {
        note("round " + std::to_string(tx.round()) + ": malformed report payload from " + h.sender.str());
        continue;
      }
      received[u] = OpeCiphertext{get_be(plain, plain.size())};
    }

    DecisionVector vec;
    vec.bits.reserve(user_channels_.size());
    for (const auto& [u, key] : user_channels_) {
      auto it = received.find(u);
      if (it == received.end()) {
        vec.bits.push_back(0);
        vec.present.push_back(0);
        continue;
      }
      tx.count(id(), CryptoOp::kCompare);
      vec.bits.push_back(it->second < tau_cache_.at(u) ? 0 : 1);
      vec.present.push_back(1);
    }
    for (auto& [u, c] : received) last_reports_[u] = c;

    ViewEvent produced;
    produced.entity = id();
    produced.direction = Direction::kLocal;
    produced.tag = ViewTag::kPlaintextBit;
    produced.label = "bits";
    produced.bits = vec.str();
    produced.size_bytes = 2 * detail::bitmap_bytes(vec.bits.size());
    tx.record(std::move(produced));

    MessageHeader h{.receiver = EntityId::fusion_center(), .kind = MessageKind::kDecisionVec,
                    .content = Content::kDecisionBits};
    return seal(tx, fc_channel_, h, vec.encode());
  }

  void receive(const ProtocolMessage& msg, Transcript& tx) {
    const AeadKey* key = nullptr;
    if (msg.header.sender == EntityId::fusion_center()) {
      key = &fc_channel_;
    } else if (auto it = user_channels_.find(msg.header.sender.user_id()); it != user_channels_.end()) {
      key = &it->second;
    }
    if (!key) {
      note("message from unknown sender " + msg.header.sender.str());
      return;
    }
    try {
      open(tx, *key, msg);
    } catch (const AuthenticationError& e) {
      note(e.what());
    }
  }

  ProtocolMessage send_out_of_protocol(EntityId to, Content content, UserId subject, ByteView payload,
                                       Transcript& tx) {
    const AeadKey& key = to == EntityId::fusion_center() ? fc_channel_ : user_channels_.at(to.user_id());
    MessageHeader h{.receiver = to, .kind = MessageKind::kOutOfProtocol, .content = content, .subject = subject};
    return seal(tx, key, h, payload);
  }

  std::vector<UserId> roster() const {
    std::vector<UserId> r;
    for (const auto& [u, k] : user_channels_) r.push_back(u);
    return r;
  }
  const std::map<UserId, OpeCiphertext>& threshold_cache() const { return tau_cache_; }
  const std::map<UserId, OpeCiphertext>& last_reports() const { return last_reports_; }

 private:
  AeadKey fc_channel_;
  std::map<UserId, AeadKey> user_channels_;
  std::map<UserId, OpeCiphertext> tau_cache_;
  std::map<UserId, OpeCiphertext> last_reports_;
};

// ---------------------------------------------------------------------------

struct FusionCenterConfig {
  std::uint64_t tau = 0;  // quantized energy threshold
  DetectionProfile profile;
  bool reputation = true;
  std::optional<std::size_t> lambda_override;  // fixed lambda for sweeps
};

struct RoundDecision {
  Decision decision = Decision::kFree;
  double vote_sum = 0.0;
  std::size_t lambda = 0;
  std::size_t present = 0;
  std::vector<PresentBit> bits;
};

class FusionCenter : public Endpoint {
 public:
  FusionCenter(FusionCenterConfig cfg, const KeyTable& keys, Transcript& tx)
      : Endpoint(EntityId::fusion_center()),
        cfg_(cfg),
        alpha_(compute_alpha(cfg.profile)),
        gw_channel_(keys.channel(EntityId::fusion_center(), EntityId::gateway())) {
    auto domain = std::uint64_t{1} << keys.ope_params().domain_bits;
    if (cfg_.tau >= domain) throw InvalidArgument("tau outside OPE domain");
    if (keys.users().empty()) throw InvalidArgument("fusion center needs at least one user");
    log_key(tx, gw_channel_.label, "key:channel");
  }

  // c_i = E_{k_FC,GW}(OPE_{k_FC,i}(tau)) for a newly keyed user.
  ProtocolMessage admit(UserId u, const KeyTable& keys, Transcript& tx) {
    if (users_.contains(u)) throw InvalidArgument("fusion center already serves U" + std::to_string(u.value));
    const auto& k = keys.pair(EntityId::fusion_center(), EntityId::user(u));
    auto [it, inserted] = users_.emplace(u, UserSlot{DefaultOpe(*k.ope), k.channel});
    log_key(tx, k.channel.label, "key:ope");
    log_key(tx, k.channel.label, "key:channel");
    reputation_.emplace(u, ReputationRecord{});
    refresh_weights(reputation_);
    auto c = ope(tx, it->second.ope, cfg_.tau);
    MessageHeader h{.receiver = EntityId::gateway(), .kind = MessageKind::kInitC, .content = Content::kOpeValue,
                    .subject = u};
    return seal(tx, gw_channel_, h, encode_ope(c, k.ope->ciphertext_bytes()));
  }

  void revoke(UserId u) {
    if (!users_.erase(u)) throw InvalidArgument("fusion center does not serve U" + std::to_string(u.value));
    reputation_.erase(u);
    refresh_weights(reputation_);
  }

  void recompute_lambda() { lambda_ = users_.empty() ? 0 : compute_lambda(users_.size(), alpha_); }

  // V = sum w_i b_i over present users; busy iff V >= lambda(n_present).
  // Returns nullopt when no user was present. Throws AuthenticationError on a bad zeta.
  std::optional<RoundDecision> decide(const ProtocolMessage& zeta, Transcript& tx) {
    if (zeta.header.kind != MessageKind::kDecisionVec || zeta.header.sender != EntityId::gateway()) {
      throw ProtocolError("expected a decision vector from GW");
    }
    auto plain = open(tx, gw_channel_, zeta);
    auto vec = DecisionVector::decode(plain, users_.size());

    RoundDecision out;
    std::vector<double> w;
    std::vector<std::uint8_t> b;
    std::size_t k = 0;
    for (const auto& [u, slot] : users_) {
      if (vec.present[k]) {
        out.bits.push_back({u, vec.bits[k]});
        w.push_back(cfg_.reputation ? reputation_.at(u).weight : 1.0);
        b.push_back(vec.bits[k]);
      }
      ++k;
    }
    out.present = out.bits.size();
    if (out.present == 0) return std::nullopt;
    out.lambda = cfg_.lambda_override ? *cfg_.lambda_override : compute_lambda(out.present, alpha_);
    auto fused = fuse_votes(w, b, out.lambda);
    out.decision = fused.decision;
    out.vote_sum = fused.vote_sum;
    if (cfg_.reputation) {
      update_reputation(reputation_, out.bits, out.decision);
      refresh_weights(reputation_);
    }
    return out;
  }

  void receive(const ProtocolMessage& msg, Transcript& tx) {
    const AeadKey* key = nullptr;
    if (msg.header.sender == EntityId::gateway()) {
      key = &gw_channel_;
    } else if (auto it = users_.find(msg.header.sender.user_id()); it != users_.end()) {
      key = &it->second.channel;
    }
    if (!key) {
      note("message from unknown sender " + msg.header.sender.str());
      return;
    }
    try {
      open(tx, *key, msg);
    } catch (const AuthenticationError& e) {
      note(e.what());
    }
  }

  ProtocolMessage send_out_of_protocol(EntityId to, Content content, UserId subject, ByteView payload,
                                       Transcript& tx) {
    const AeadKey& key = to == EntityId::gateway() ? gw_channel_ : users_.at(to.user_id()).channel;
    MessageHeader h{.receiver = to, .kind = MessageKind::kOutOfProtocol, .content = content, .subject = subject};
    return seal(tx, key, h, payload);
  }

  const FusionCenterConfig& config() const { return cfg_; }
  double alpha() const { return alpha_; }
  std::size_t lambda() const { return lambda_; }
  std::size_t live_count() const { return users_.size(); }
  const ReputationTable& reputation() const { return reputation_; }
  const OpeKey& ope_key(UserId u) const { return users_.at(u).ope.key(); }
  std::vector<UserId> roster() const {
    std::vector<UserId> r;
    for (const auto& [u, s] : users_) r.push_back(u);
    return r;
  }

 private:
  struct UserSlot {
    DefaultOpe ope;
    AeadKey channel;
  };

  FusionCenterConfig cfg_;
  double alpha_;
  AeadKey gw_channel_;
  std::map<UserId, UserSlot> users_;
  ReputationTable reputation_;
  std::size_t lambda_ = 0;
};

// ---------------------------------------------------------------------------
// Operation-level entry points.

struct FcInitResult {
  FusionCenter fc;
  std::vector<ProtocolMessage> init_messages;
};

// Initialization: w <- 1, lambda from the half-voting rule, one c_i per user.
inline FcInitResult fc_init(const FusionCenterConfig& cfg, const KeyTable& keys, Transcript& tx) {
  FcInitResult r{FusionCenter(cfg, keys, tx), {}};
  for (auto u : keys.users()) r.init_messages.push_back(r.fc.admit(u, keys, tx));
  r.fc.recompute_lambda();
  return r;
}

inline ProtocolMessage su_sense_report(SecondaryUser& su, std::uint64_t rss_q, Transcript& tx) {
  return su.sense_report(rss_q, tx);
}

inline ProtocolMessage gw_compare(Gateway& gw, std::span<const ProtocolMessage> reports, Transcript& tx) {
  return gw.compare(reports, tx);
}

inline std::optional<RoundDecision> fc_decide(FusionCenter& fc, const ProtocolMessage& zeta, Transcript& tx) {
  return fc.decide(zeta, tx);
}

struct MembershipChange {
  std::vector<UserId> joined;
  std::vector<UserId> left;
  std::size_t beta = 0;       // number of joiners
  std::size_t lambda = 0;     // lambda' over the new live count
};

// Applies joins and leaves atomically; one lambda recomputation. Joiners' c_i are
// sent to and cached by the gateway. Users that stay are not contacted.
inline MembershipChange handle_membership(FusionCenter& fc, Gateway& gw, std::span<const UserId> joins,
                                          std::span<const UserId> leaves, KeyTable& keys, Transcript& tx) {
  std::set<UserId> join_set(joins.begin(), joins.end());
  std::set<UserId> leave_set(leaves.begin(), leaves.end());
  if (join_set.size() != joins.size() || leave_set.size() != leaves.size()) {
    throw InvalidArgument("duplicate user in membership change");
  }
  for (auto u : joins) {
    if (leave_set.contains(u)) throw InvalidArgument("user both joins and leaves");
    if (keys.users().contains(u)) throw InvalidArgument("joining user U" + std::to_string(u.value) + " already live");
  }
  for (auto u : leaves) {
    if (!keys.users().contains(u)) throw InvalidArgument("leaving user U" + std::to_string(u.value) + " not live");
  }
  if (keys.users().size() + joins.size() - leaves.size() == 0) throw InvalidArgument("membership change empties network");

  MembershipChange change;
  for (auto u : leaves) {
    keys.revoke(u);
    fc.revoke(u);
    gw.revoke(u);
    change.left.push_back(u);
  }
  for (auto u : joins) {
    keys.admit(u);
    gw.admit(u, keys, tx);
    auto c = fc.admit(u, keys, tx);
    transmit(tx, c);
    gw.receive_init(c, tx);
    change.joined.push_back(u);
  }
  change.beta = joins.size();
  fc.recompute_lambda();
  change.lambda = fc.lambda();
  return change;
}

}  // namespace lp3pss
