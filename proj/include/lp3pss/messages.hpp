#pragma once

#include <cstdint>
#include <string>

#include "lp3pss/bytes.hpp"
#include "lp3pss/crypto.hpp"
#include "lp3pss/ids.hpp"
#include "lp3pss/transcript.hpp"

namespace lp3pss {

// Protocol step a message belongs to.
enum class MessageKind : std::uint8_t {
  kInitC = 1,         // FC -> GW: E_{k_FC,GW}(OPE_{k_FC,i}(tau))
  kReport = 2,        // U_i -> GW: E_{k_GW,i}(OPE_{k_FC,i}(RSS_i))
  kDecisionVec = 3,   // GW -> FC: E_{k_FC,GW}(b)
  kOutOfProtocol = 4, // anything an honest entity never sends
};

// What the decrypted payload is. Determines the view tag logged by the receiver.
enum class Content : std::uint8_t {
  kOpeValue = 1,
  kDecisionBits = 2,
  kPlainRss = 3,
  kPlainThreshold = 4,
  kKeyMaterial = 5,
};

inline const char* wire_label(MessageKind k) {
  switch (k) {
    case MessageKind::kInitC:
      return "init_c";
    case MessageKind::kReport:
      return "report";
    case MessageKind::kDecisionVec:
      return "decision_vec";
    case MessageKind::kOutOfProtocol:
      return "out_of_protocol";
  }
  return "?";
}

struct MessageHeader {
  EntityId sender;
  EntityId receiver;
  MessageKind kind = MessageKind::kOutOfProtocol;
  Content content = Content::kOpeValue;
  UserId subject;          // user the payload concerns (0 for decision vectors)
  std::uint64_t round = 0;

  // Associated data: every header field, fixed width.
  Bytes associated_data() const {
    Bytes ad;
    ad.reserve(24);
    ad.push_back(static_cast<std::uint8_t>(kind));
    ad.push_back(static_cast<std::uint8_t>(content));
    ad.push_back(static_cast<std::uint8_t>(sender.role));
    put_be(ad, sender.index, 4);
    ad.push_back(static_cast<std::uint8_t>(receiver.role));
    put_be(ad, receiver.index, 4);
    put_be(ad, subject.value, 4);
    put_be(ad, round, 8);
    return ad;
  }

  bool operator==(const MessageHeader&) const = default;
};

struct ProtocolMessage {
  MessageHeader header;
  AeadCiphertext body;
  std::uint64_t id = 0;  // assigned on transmission

  std::uint64_t wire_bytes() const { return body.wire_size(); }
  Bytes encode_body() const { return encode_aead(body); }
};

// Hands a message from sender to receiver, logging it at both ends.
inline void transmit(Transcript& tx, ProtocolMessage& msg) {
  msg.id = tx.next_message_id();
  tx.log_transfer(msg.header.sender, msg.header.receiver, msg.id, msg.wire_bytes(), wire_label(msg.header.kind));
}

}  // namespace lp3pss
