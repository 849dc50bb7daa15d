#pragma once

// Everything observable about a protocol execution: per-entity view events, the
// crypto-operation ledger and per-link traffic. One Transcript per simulation run.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lp3pss/errors.hpp"
#include "lp3pss/ids.hpp"

namespace lp3pss {

enum class Phase : std::uint8_t { kInit = 0, kSensing = 1, kMembership = 2 };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::kInit:
      return "init";
    case Phase::kSensing:
      return "sensing";
    case Phase::kMembership:
      return "membership";
  }
  return "?";
}

enum class CryptoOp : std::uint8_t { kOpeEncrypt = 0, kAeadEncrypt = 1, kAeadDecrypt = 2, kCompare = 3 };

struct OpTally {
  std::uint64_t ope_enc = 0;
  std::uint64_t aead_enc = 0;
  std::uint64_t aead_dec = 0;
  std::uint64_t comparisons = 0;

  void add(CryptoOp op) {
    switch (op) {
      case CryptoOp::kOpeEncrypt:
        ++ope_enc;
        break;
      case CryptoOp::kAeadEncrypt:
        ++aead_enc;
        break;
      case CryptoOp::kAeadDecrypt:
        ++aead_dec;
        break;
      case CryptoOp::kCompare:
        ++comparisons;
        break;
    }
  }

  OpTally& operator+=(const OpTally& o) {
    ope_enc += o.ope_enc;
    aead_enc += o.aead_enc;
    aead_dec += o.aead_dec;
    comparisons += o.comparisons;
    return *this;
  }

  bool operator==(const OpTally&) const = default;
};

// Per-phase operation counts of one entity.
struct OpCounts {
  std::array<OpTally, 3> by_phase{};

  OpTally& operator[](Phase p) { return by_phase[static_cast<std::size_t>(p)]; }
  const OpTally& operator[](Phase p) const { return by_phase[static_cast<std::size_t>(p)]; }

  OpTally total() const {
    OpTally t;
    for (const auto& p : by_phase) t += p;
    return t;
  }

  OpCounts& operator+=(const OpCounts& o) {
    for (std::size_t i = 0; i < by_phase.size(); ++i) by_phase[i] += o.by_phase[i];
    return *this;
  }

  bool operator==(const OpCounts&) const = default;
};

struct LinkTraffic {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;

  bool operator==(const LinkTraffic&) const = default;
};

// Traffic of one round, split by phase; links are keyed "sender->receiver" class
// ("SU->GW", "FC->GW", "GW->FC", ...).
struct CommCounts {
  std::map<std::string, LinkTraffic> sensing;
  std::map<std::string, LinkTraffic> membership;
  std::map<std::string, LinkTraffic> init;

  // AEAD ciphertexts exchanged in the sensing phase.
  std::uint64_t logical_ciphertexts() const {
    std::uint64_t n = 0;
    for (const auto& [link, t] : sensing) n += t.messages;
    return n;
  }
  std::uint64_t sensing_bytes() const {
    std::uint64_t n = 0;
    for (const auto& [link, t] : sensing) n += t.bytes;
    return n;
  }

  std::map<std::string, LinkTraffic>& for_phase(Phase p) {
    return p == Phase::kSensing ? sensing : p == Phase::kMembership ? membership : init;
  }
};

enum class Direction : std::uint8_t { kSend = 0, kReceive = 1, kLocal = 2 };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::kSend:
      return "send";
    case Direction::kReceive:
      return "recv";
    case Direction::kLocal:
      return "local";
  }
  return "?";
}

enum class ViewTag : std::uint8_t {
  kOpaqueCiphertext = 0,
  kOpeOrderPair = 1,
  kPlaintextBit = 2,
  kPlaintextValue = 3,
  kKeyMaterial = 4,
};

inline const char* to_string(ViewTag t) {
  switch (t) {
    case ViewTag::kOpaqueCiphertext:
      return "OPAQUE_CIPHERTEXT";
    case ViewTag::kOpeOrderPair:
      return "OPE_ORDER_PAIR";
    case ViewTag::kPlaintextBit:
      return "PLAINTEXT_BIT";
    case ViewTag::kPlaintextValue:
      return "PLAINTEXT_VALUE";
    case ViewTag::kKeyMaterial:
      return "KEY_MATERIAL";
  }
  return "?";
}

// One thing an entity observed.
//
// label names what was observed: "init_c"/"report"/"decision_vec" for opaque
// frames, "ope_tau"/"ope_rss" for order-comparable values, "bits", "rss", "tau",
// "rss_sum", "key:channel"/"key:ope" for key material. `pair` names the entity
// pair a key belongs to.
struct ViewEvent {
  std::uint64_t round = 0;
  EntityId entity;
  Direction direction = Direction::kLocal;
  ViewTag tag = ViewTag::kOpaqueCiphertext;
  std::uint64_t size_bytes = 0;
  std::string label;
  std::optional<EntityId> peer;
  std::optional<UserId> subject;
  std::optional<std::uint64_t> message_id;
  std::optional<std::uint64_t> value;
  std::string pair;
  std::string bits;  // '0'/'1'/'-' per roster position, for bit vectors

  bool operator==(const ViewEvent&) const = default;
};

struct ViewLog {
  EntityId entity;
  std::vector<ViewEvent> events;
};

inline nlohmann::ordered_json to_json(const ViewEvent& e) {
  nlohmann::ordered_json meta;
  meta["label"] = e.label;
  if (e.peer) meta["peer"] = e.peer->str();
  if (e.subject) meta["subject"] = EntityId::user(*e.subject).str();
  if (e.message_id) meta["message_id"] = *e.message_id;
  if (e.value) meta["value"] = *e.value;
  if (!e.pair.empty()) meta["pair"] = e.pair;
  if (!e.bits.empty()) meta["bits"] = e.bits;
  nlohmann::ordered_json j;
  j["round"] = e.round;
  j["entity"] = e.entity.str();
  j["direction"] = to_string(e.direction);
  j["tag"] = to_string(e.tag);
  j["size_bytes"] = e.size_bytes;
  j["meta"] = std::move(meta);
  return j;
}

namespace detail {

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& s, const std::array<Enum, N>& values, const char* what) {
  for (auto v : values) {
    if (s == to_string(v)) return v;
  }
  throw MalformedInput(std::string("unknown ") + what + ": " + s);
}

}  // namespace detail

inline ViewEvent view_event_from_json(const nlohmann::json& j) {
  try {
    ViewEvent e;
    e.round = j.at("round").get<std::uint64_t>();
    e.entity = EntityId::parse(j.at("entity").get<std::string>());
    e.direction = detail::enum_from(j.at("direction").get<std::string>(),
                                    std::array{Direction::kSend, Direction::kReceive, Direction::kLocal}, "direction");
    e.tag = detail::enum_from(j.at("tag").get<std::string>(),
                              std::array{ViewTag::kOpaqueCiphertext, ViewTag::kOpeOrderPair, ViewTag::kPlaintextBit,
                                         ViewTag::kPlaintextValue, ViewTag::kKeyMaterial},
                              "tag");
    e.size_bytes = j.at("size_bytes").get<std::uint64_t>();
    const auto& meta = j.at("meta");
    e.label = meta.value("label", std::string{});
    if (meta.contains("peer")) e.peer = EntityId::parse(meta["peer"].get<std::string>());
    if (meta.contains("subject")) e.subject = EntityId::parse(meta["subject"].get<std::string>()).user_id();
    if (meta.contains("message_id")) e.message_id = meta["message_id"].get<std::uint64_t>();
    if (meta.contains("value")) e.value = meta["value"].get<std::uint64_t>();
    e.pair = meta.value("pair", std::string{});
    e.bits = meta.value("bits", std::string{});
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw MalformedInput(std::string("bad transcript event: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw MalformedInput(std::string("bad transcript event: ") + ex.what());
  }
}

// Shared recorder threaded through all entities of one run. Holds the current
// (round, phase) clock that events and operations are attributed to.
class Transcript {
 public:
  void set_clock(std::uint64_t round, Phase phase) {
    round_ = round;
    phase_ = phase;
  }
  std::uint64_t round() const { return round_; }
  Phase phase() const { return phase_; }

  void record(ViewEvent e) {
    e.round = round_;
    events_.push_back(std::move(e));
  }

  void count(EntityId who, CryptoOp op) { ops_[round_][who][phase_].add(op); }

  std::uint64_t next_message_id() { return next_message_id_++; }

  // Logs an opaque frame at both ends and charges its bytes to the link.
  void log_transfer(EntityId sender, EntityId receiver, std::uint64_t id, std::uint64_t bytes,
                    const std::string& label) {
    ViewEvent e;
    e.tag = ViewTag::kOpaqueCiphertext;
    e.size_bytes = bytes;
    e.label = label;
    e.message_id = id;
    e.entity = sender;
    e.direction = Direction::kSend;
    e.peer = receiver;
    record(e);
    e.entity = receiver;
    e.direction = Direction::kReceive;
    e.peer = sender;
    record(e);
    auto& link = comm_[round_].for_phase(phase_)[link_class(sender) + "->" + link_class(receiver)];
    ++link.messages;
    link.bytes += bytes;
  }

  const std::vector<ViewEvent>& events() const { return events_; }

  std::map<EntityId, ViewLog> view_logs() const { return split_views(events_); }

  static std::map<EntityId, ViewLog> split_views(const std::vector<ViewEvent>& events) {
    std::map<EntityId, ViewLog> logs;
    for (const auto& e : events) {
      auto& log = logs[e.entity];
      log.entity = e.entity;
      log.events.push_back(e);
    }
    return logs;
  }

  // Per-entity operation counts in one round (empty map when nothing happened).
  const std::map<EntityId, OpCounts>& ops_in_round(std::uint64_t round) const {
    static const std::map<EntityId, OpCounts> kEmpty;
    auto it = ops_.find(round);
    return it == ops_.end() ? kEmpty : it->second;
  }
  const std::map<std::uint64_t, std::map<EntityId, OpCounts>>& ops() const { return ops_; }

  const CommCounts& comm_in_round(std::uint64_t round) const {
    static const CommCounts kEmpty;
    auto it = comm_.find(round);
    return it == comm_.end() ? kEmpty : it->second;
  }

  std::map<EntityId, OpCounts> op_totals() const {
    std::map<EntityId, OpCounts> t;
    for (const auto& [round, per_entity] : ops_) {
      for (const auto& [who, counts] : per_entity) t[who] += counts;
    }
    return t;
  }

  void write_jsonl(std::ostream& out) const {
    for (const auto& e : events_) out << to_json(e).dump() << '\n';
  }

  static std::vector<ViewEvent> read_jsonl(std::istream& in) {
    std::vector<ViewEvent> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& ex) {
        throw MalformedInput("transcript line " + std::to_string(lineno) + ": " + ex.what());
      }
      events.push_back(view_event_from_json(j));
    }
    return events;
  }

 private:
  static std::string link_class(EntityId e) { return e.is_user() ? "SU" : e.str(); }

  std::uint64_t round_ = 0;
  Phase phase_ = Phase::kInit;
  std::uint64_t next_message_id_ = 0;
  std::vector<ViewEvent> events_;
  std::map<std::uint64_t, std::map<EntityId, OpCounts>> ops_;
  std::map<std::uint64_t, CommCounts> comm_;
};

}  // namespace lp3pss
