#pragma once

// Symmetric primitives shared by every protocol entity:
//  * a keyed, strictly order-preserving encryption over a d-bit domain,
//  * AES-128-GCM authenticated encryption with counter nonces,
//  * reproducible pairwise key derivation standing in for key establishment.

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <compare>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lp3pss/bytes.hpp"
#include "lp3pss/errors.hpp"
#include "lp3pss/ids.hpp"

namespace lp3pss {

using Key128 = std::array<std::uint8_t, 16>;
using MasterSeed = std::array<std::uint8_t, 32>;

namespace detail {

struct EvpCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

inline EvpCtx new_ctx() {
  EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  return ctx;
}

inline std::array<std::uint8_t, 32> hmac_sha256(ByteView key, ByteView msg) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), out.data(), &len) ==
          nullptr ||
      len != out.size()) {
    throw Error("HMAC-SHA256 failed");
  }
  return out;
}

inline Key128 truncate128(const std::array<std::uint8_t, 32>& h) {
  Key128 k{};
  std::copy_n(h.begin(), k.size(), k.begin());
  return k;
}

// AES-128 evaluated on the big-endian encodings of first..first+count-1; returns the
// leading 64 bits of each output block.
inline std::vector<std::uint64_t> aes_prf_block_range(const Key128& key, std::uint64_t first, std::size_t count) {
  std::vector<std::uint8_t> in(count * 16, 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t x = first + i;
    for (int b = 0; b < 8; ++b) in[i * 16 + 8 + b] = static_cast<std::uint8_t>(x >> (56 - 8 * b));
  }
  std::vector<std::uint8_t> out(in.size() + 16);
  auto ctx = new_ctx();
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1 ||
      EVP_CIPHER_CTX_set_padding(ctx.get(), 0) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1) {
    throw Error("AES PRF evaluation failed");
  }
  std::vector<std::uint64_t> r(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v = (v << 8) | out[i * 16 + b];
    r[i] = v;
  }
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Order-preserving encryption

struct OpeKey {
  Key128 key_bytes{};
  unsigned domain_bits = 16;
  unsigned range_bits = 32;

  void validate() const {
    if (domain_bits < 1 || domain_bits > 32) throw InvalidArgument("OPE domain_bits must be in [1, 32]");
    if (range_bits < domain_bits + 8) throw InvalidArgument("OPE range_bits must be >= domain_bits + 8");
    if (range_bits > 63) throw InvalidArgument("OPE range_bits must be <= 63");
  }

  std::uint64_t domain_size() const { return std::uint64_t{1} << domain_bits; }
  // Width in bytes of a serialized ciphertext.
  std::size_t ciphertext_bytes() const { return (range_bits + 7) / 8; }

  bool operator==(const OpeKey&) const = default;
};

struct OpeCiphertext {
  std::uint64_t value = 0;

  auto operator<=>(const OpeCiphertext&) const = default;
};

inline Bytes encode_ope(OpeCiphertext c, std::size_t width) {
  Bytes out;
  put_be(out, c.value, width);
  return out;
}

inline OpeCiphertext decode_ope(ByteView in, std::size_t width) {
  if (in.size() != width) throw MalformedInput("OPE ciphertext has wrong width");
  return OpeCiphertext{get_be(in, width)};
}

// Anything usable as the order-preserving layer of the protocol.
template <typename T>
concept OrderPreservingScheme = requires(T& s, const T& cs, std::uint64_t m) {
  { s.encrypt(m) } -> std::same_as<OpeCiphertext>;
  { cs.key() } -> std::convertible_to<const OpeKey&>;
};

// f(m) = sum_{i=0..m} (1 + PRF_K(i) mod M), M = 2^(range-domain) - 1.
//
// Every increment is >= 1, so f is strictly increasing, and f(2^d - 1) <= 2^d * M < 2^range.
// Prefix sums are memoized lazily in chunks; an instance must stay confined to one thread.
class PrfSumOpe {
 public:
  explicit PrfSumOpe(OpeKey key) : key_(key) {
    key_.validate();
    modulus_ = (std::uint64_t{1} << (key_.range_bits - key_.domain_bits)) - 1;
  }

  const OpeKey& key() const { return key_; }

  OpeCiphertext encrypt(std::uint64_t m) {
    if (m >= key_.domain_size()) {
      throw InvalidArgument("OPE plaintext " + std::to_string(m) + " outside " + std::to_string(key_.domain_bits) +
                            "-bit domain");
    }
    extend_to(m);
    return OpeCiphertext{prefix_[m]};
  }

  // Number of memoized prefix entries.
  std::size_t cached() const { return prefix_.size(); }

 private:
  static constexpr std::uint64_t kChunk = 1024;

  void extend_to(std::uint64_t m) {
    if (m < prefix_.size()) return;
    std::uint64_t target = std::min<std::uint64_t>((m / kChunk + 1) * kChunk, key_.domain_size());
    std::uint64_t first = prefix_.size();
    auto prf = detail::aes_prf_block_range(key_.key_bytes, first, static_cast<std::size_t>(target - first));
    std::uint64_t acc = prefix_.empty() ? 0 : prefix_.back();
    prefix_.reserve(target);
    for (auto r : prf) {
      acc += 1 + r % modulus_;
      prefix_.push_back(acc);
    }
  }

  OpeKey key_;
  std::uint64_t modulus_ = 1;
  std::vector<std::uint64_t> prefix_;
};

static_assert(OrderPreservingScheme<PrfSumOpe>);

using DefaultOpe = PrfSumOpe;

inline OpeCiphertext ope_encrypt(const OpeKey& key, std::uint64_t m) { return PrfSumOpe(key).encrypt(m); }

// ---------------------------------------------------------------------------
// Authenticated encryption

inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kLengthPrefixBytes = 4;
// Bytes added to a payload by the wire encoding.
inline constexpr std::size_t kAeadFramingBytes = kLengthPrefixBytes + kNonceBytes + kTagBytes;

struct AeadKey {
  Key128 key_bytes{};
  std::string label;  // e.g. "FC|U3", for diagnostics only

  bool operator==(const AeadKey&) const = default;
};

using Nonce = std::array<std::uint8_t, kNonceBytes>;

struct AeadCiphertext {
  Nonce nonce{};
  Bytes payload;
  std::array<std::uint8_t, kTagBytes> tag{};

  std::size_t wire_size() const { return kAeadFramingBytes + payload.size(); }
  bool operator==(const AeadCiphertext&) const = default;
};

// Per-sender nonce stream: 4-byte sender tag followed by a 64-bit big-endian counter.
// Two senders sharing a key must use distinct sender tags.
class NonceSequence {
 public:
  explicit NonceSequence(std::uint32_t sender_tag = 0) : sender_tag_(sender_tag) {}

  Nonce next() {
    Nonce n{};
    for (int i = 0; i < 4; ++i) n[i] = static_cast<std::uint8_t>(sender_tag_ >> (24 - 8 * i));
    for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(counter_ >> (56 - 8 * i));
    ++counter_;
    return n;
  }

  std::uint64_t issued() const { return counter_; }

 private:
  std::uint32_t sender_tag_;
  std::uint64_t counter_ = 0;
};

inline AeadCiphertext aead_encrypt(const AeadKey& key, ByteView payload, ByteView assoc, const Nonce& nonce) {
  if (payload.empty()) throw InvalidArgument("AEAD payload must be non-empty");
  AeadCiphertext ct;
  ct.nonce = nonce;
  ct.payload.resize(payload.size());
  auto ctx = detail::new_ctx();
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
            EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.key_bytes.data(), nonce.data()) == 1;
  if (ok && !assoc.empty()) {
    ok = EVP_EncryptUpdate(ctx.get(), nullptr, &len, assoc.data(), static_cast<int>(assoc.size())) == 1;
  }
  ok = ok &&
       EVP_EncryptUpdate(ctx.get(), ct.payload.data(), &len, payload.data(), static_cast<int>(payload.size())) == 1 &&
       EVP_EncryptFinal_ex(ctx.get(), ct.payload.data() + len, &len) == 1 &&
       EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes, ct.tag.data()) == 1;
  if (!ok) throw Error("AES-GCM encryption failed");
  return ct;
}

inline AeadCiphertext aead_encrypt(const AeadKey& key, ByteView payload, ByteView assoc, NonceSequence& nonces) {
  return aead_encrypt(key, payload, assoc, nonces.next());
}

inline Bytes aead_decrypt(const AeadKey& key, const AeadCiphertext& ct, ByteView assoc) {
  Bytes out(ct.payload.size());
  auto ctx = detail::new_ctx();
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
            EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.key_bytes.data(), ct.nonce.data()) == 1;
  if (ok && !assoc.empty()) {
    ok = EVP_DecryptUpdate(ctx.get(), nullptr, &len, assoc.data(), static_cast<int>(assoc.size())) == 1;
  }
  if (ok && !ct.payload.empty()) {
    ok = EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.payload.data(), static_cast<int>(ct.payload.size())) == 1;
  }
  if (!ok) throw Error("AES-GCM decryption setup failed");
  auto tag = ct.tag;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) != 1) {
    throw Error("AES-GCM tag setup failed");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &final_len) != 1) {
    throw AuthenticationError("authentication failed under key " + key.label);
  }
  return out;
}

// Wire encoding: u32 big-endian length, then nonce || payload || tag.
inline Bytes encode_aead(const AeadCiphertext& ct) {
  Bytes out;
  out.reserve(ct.wire_size());
  put_be(out, kNonceBytes + ct.payload.size() + kTagBytes, kLengthPrefixBytes);
  out.insert(out.end(), ct.nonce.begin(), ct.nonce.end());
  out.insert(out.end(), ct.payload.begin(), ct.payload.end());
  out.insert(out.end(), ct.tag.begin(), ct.tag.end());
  return out;
}

inline AeadCiphertext decode_aead(ByteView wire) {
  if (wire.size() < kLengthPrefixBytes) throw MalformedInput("AEAD frame shorter than its length prefix");
  auto body_len = get_be(wire, kLengthPrefixBytes);
  if (body_len != wire.size() - kLengthPrefixBytes) throw MalformedInput("AEAD frame length prefix mismatch");
  if (body_len <= kNonceBytes + kTagBytes) throw MalformedInput("AEAD frame too short");
  auto body = wire.subspan(kLengthPrefixBytes);
  AeadCiphertext ct;
  std::copy_n(body.begin(), kNonceBytes, ct.nonce.begin());
  ct.payload.assign(body.begin() + kNonceBytes, body.end() - kTagBytes);
  std::copy(body.end() - kTagBytes, body.end(), ct.tag.begin());
  return ct;
}

inline Bytes aead_decrypt(const AeadKey& key, ByteView wire, ByteView assoc) {
  return aead_decrypt(key, decode_aead(wire), assoc);
}

// ---------------------------------------------------------------------------
// Pairwise keys

struct OpeParams {
  unsigned domain_bits = 16;
  unsigned range_bits = 32;

  bool operator==(const OpeParams&) const = default;
};

// Key material of one entity pair. FC<->user pairs also carry an OPE subkey.
struct PairKeys {
  AeadKey channel;
  std::optional<OpeKey> ope;

  bool operator==(const PairKeys&) const = default;
};

using EntityPair = std::pair<EntityId, EntityId>;

inline EntityPair ordered_pair(EntityId a, EntityId b) { return a < b ? EntityPair{a, b} : EntityPair{b, a}; }

// All live pairwise keys: (FC,GW), (FC,Ui) and (GW,Ui) for every live user.
class KeyTable {
 public:
  KeyTable(MasterSeed seed, OpeParams ope) : seed_(seed), ope_(ope) {
    OpeKey probe{.domain_bits = ope.domain_bits, .range_bits = ope.range_bits};
    probe.validate();
    insert(EntityId::fusion_center(), EntityId::gateway());
  }

  void admit(UserId u) {
    if (users_.contains(u)) throw InvalidArgument("user U" + std::to_string(u.value) + " already has keys");
    users_.insert(u);
    insert(EntityId::fusion_center(), EntityId::user(u));
    insert(EntityId::gateway(), EntityId::user(u));
  }

  void revoke(UserId u) {
    if (!users_.erase(u)) throw InvalidArgument("user U" + std::to_string(u.value) + " has no keys");
    keys_.erase(ordered_pair(EntityId::fusion_center(), EntityId::user(u)));
    keys_.erase(ordered_pair(EntityId::gateway(), EntityId::user(u)));
  }

  const PairKeys& pair(EntityId a, EntityId b) const {
    auto it = keys_.find(ordered_pair(a, b));
    if (it == keys_.end()) throw InvalidArgument("no key for pair " + a.str() + "|" + b.str());
    return it->second;
  }

  const AeadKey& channel(EntityId a, EntityId b) const { return pair(a, b).channel; }
  const OpeKey& ope(UserId u) const { return *pair(EntityId::fusion_center(), EntityId::user(u)).ope; }

  bool contains(EntityId a, EntityId b) const { return keys_.contains(ordered_pair(a, b)); }
  std::size_t size() const { return keys_.size(); }
  const std::set<UserId>& users() const { return users_; }
  const std::map<EntityPair, PairKeys>& entries() const { return keys_; }
  const OpeParams& ope_params() const { return ope_; }

  bool operator==(const KeyTable& o) const { return keys_ == o.keys_; }

 private:
  void insert(EntityId a, EntityId b) {
    auto p = ordered_pair(a, b);
    std::string label = p.first.str() + "|" + p.second.str();
    auto pair_secret = detail::hmac_sha256(seed_, to_bytes("lp3pss/pair/" + label));
    PairKeys k;
    k.channel.key_bytes = detail::truncate128(detail::hmac_sha256(pair_secret, to_bytes("channel")));
    k.channel.label = label;
    if (p.first.role == Role::kFusionCenter && p.second.is_user()) {
      k.ope = OpeKey{.key_bytes = detail::truncate128(detail::hmac_sha256(pair_secret, to_bytes("ope"))),
                     .domain_bits = ope_.domain_bits,
                     .range_bits = ope_.range_bits};
    }
    keys_.emplace(p, std::move(k));
  }

  MasterSeed seed_;
  OpeParams ope_;
  std::set<UserId> users_;
  std::map<EntityPair, PairKeys> keys_;
};

// Simulated key establishment: every pair key is HMAC(seed, sorted pair label).
inline KeyTable derive_pairwise_keys(const MasterSeed& seed, const std::vector<EntityId>& entity_ids,
                                     OpeParams ope = {}) {
  std::set<EntityId> seen;
  for (auto e : entity_ids) {
    if (!seen.insert(e).second) throw InvalidArgument("duplicate entity id " + e.str());
  }
  if (!seen.contains(EntityId::fusion_center()) || !seen.contains(EntityId::gateway())) {
    throw InvalidArgument("entity list must contain FC and GW");
  }
  KeyTable table(seed, ope);
  for (auto e : seen) {
    if (e.is_user()) table.admit(e.user_id());
  }
  return table;
}

// Expands a 64-bit simulation seed into a master seed.
inline MasterSeed master_seed_from(std::uint64_t seed) {
  Bytes msg = to_bytes("lp3pss/master-seed");
  put_be(msg, seed, 8);
  static constexpr std::uint8_t kSalt[] = {'l', 'p', '3', 'p', 's', 's'};
  return detail::hmac_sha256(kSalt, msg);
}

}  // namespace lp3pss
