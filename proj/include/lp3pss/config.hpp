#pragma once

// Simulation configuration and its JSON schema:
//
//   {
//     "sensing":   {"n", "rounds", "seed", "tau", "p_f", "p_m", "p_busy",
//                   "miss_probability", "reputation", "lambda"},
//     "channel":   {"mu0", "mu1", "sigma" | "target_false_alarm", "min_dbm", "step_dbm"},
//     "churn":     {"mu", "joins": [min, max], "leaves": [min, max]},
//     "adversary": {"users": {"U3": "always-flip",
//                             "U4": {"kind": "random-flip", "p": 0.3},
//                             "U5": {"kind": "stuck-at", "bit": 1}}},
//     "crypto":    {"domain_bits", "range_bits", "blck_bits"},
//     "output":    {"report", "transcript"}
//   }
//
// Every field is optional except sensing.seed. RSS values and tau are quantized
// integers (steps of step_dbm above min_dbm).

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lp3pss/crypto.hpp"
#include "lp3pss/errors.hpp"
#include "lp3pss/fusion.hpp"
#include "lp3pss/scenario.hpp"

namespace lp3pss {

// Invalid configuration; carries one diagnostic per offending field.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> fields) : InvalidArgument(join(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& f) {
    std::string s = "invalid configuration:";
    for (const auto& x : f) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> fields_;
};

struct SensingConfig {
  std::size_t n = 10;
  std::uint64_t rounds = 100;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> tau;          // default: channel midpoint
  std::optional<DetectionProfile> profile;   // default: derived from the channel model
  double p_busy = 0.5;                        // Pr(h1) per period
  double miss_probability = 0.0;              // per-user chance a report is not sent
  bool reputation = true;
  std::optional<std::size_t> lambda_override;
};

struct CryptoConfig {
  unsigned domain_bits = 16;
  unsigned range_bits = 32;
  std::uint64_t blck_bits = 256;
};

struct OutputConfig {
  std::string report;
  std::string transcript;
};

struct SimulationConfig {
  SensingConfig sensing;
  ChannelModel channel{.sigma = sigma_for_false_alarm(1000.0, 2000.0, 0.1)};
  ChurnConfig churn;
  AdversaryProfile adversary;
  CryptoConfig crypto;
  OutputConfig output;

  std::uint64_t seed() const { return sensing.seed.value_or(0); }

  std::uint64_t tau() const {
    return sensing.tau ? *sensing.tau : static_cast<std::uint64_t>(std::llround(channel.midpoint()));
  }

  DetectionProfile profile() const { return sensing.profile ? *sensing.profile : detection_profile(channel, tau()); }

  void validate() const {
    std::vector<std::string> errs;
    auto check = [&](bool ok, const char* field, const char* msg) {
      if (!ok) errs.push_back(std::string(field) + ": " + msg);
    };
    check(sensing.n >= 1, "sensing.n", "must be >= 1");
    check(sensing.rounds >= 1, "sensing.rounds", "must be >= 1");
    check(sensing.seed.has_value(), "sensing.seed", "is required");
    check(sensing.p_busy >= 0.0 && sensing.p_busy <= 1.0, "sensing.p_busy", "must lie in [0,1]");
    check(sensing.miss_probability >= 0.0 && sensing.miss_probability < 1.0, "sensing.miss_probability",
          "must lie in [0,1)");
    check(!sensing.lambda_override || *sensing.lambda_override >= 1, "sensing.lambda", "must be >= 1");
    check(crypto.domain_bits >= 1 && crypto.domain_bits <= 32, "crypto.domain_bits", "must lie in [1,32]");
    check(crypto.range_bits >= crypto.domain_bits + 8 && crypto.range_bits <= 63, "crypto.range_bits",
          "must lie in [domain_bits+8, 63]");
    check(crypto.blck_bits >= 1, "crypto.blck_bits", "must be positive");
    check(channel.mu0 < channel.mu1, "channel.mu0", "must be below channel.mu1");
    check(channel.sigma > 0.0, "channel.sigma", "must be positive");
    check(channel.quantization.step_dbm > 0.0, "channel.step_dbm", "must be positive");
    check(churn.mu >= 0.0 && churn.mu <= 1.0, "churn.mu", "must lie in [0,1]");
    check(churn.joins.min <= churn.joins.max, "churn.joins", "min exceeds max");
    check(churn.leaves.min <= churn.leaves.max, "churn.leaves", "min exceeds max");
    check(!(churn.mu > 0.0 && churn.joins.max == 0 && churn.leaves.max == 0), "churn", "events can never change membership");
    if (crypto.domain_bits >= 1 && crypto.domain_bits <= 32) {
      auto domain = std::uint64_t{1} << crypto.domain_bits;
      check(tau() < domain, "sensing.tau", "outside the quantized RSS domain");
    }
    if (errs.empty()) {
      try {
        profile().validate();
        compute_alpha(profile());
      } catch (const InvalidArgument& e) {
        errs.push_back(std::string("sensing.p_f/p_m: ") + e.what());
      }
    }
    for (const auto& [u, b] : adversary) {
      if (u.value < 1 || u.value > sensing.n) {
        errs.push_back("adversary.users.U" + std::to_string(u.value) + ": not an initial user");
      }
      if (b.kind == Behavior::Kind::kRandomFlip && !(b.flip_probability >= 0.0 && b.flip_probability <= 1.0)) {
        errs.push_back("adversary.users.U" + std::to_string(u.value) + ".p: must lie in [0,1]");
      }
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
  }
};

namespace detail {

class FieldReader {
 public:
  FieldReader(const nlohmann::json& obj, std::string section, std::vector<std::string>& errs)
      : obj_(obj), section_(std::move(section)), errs_(errs) {
    if (!obj_.is_object()) errs_.push_back(section_ + ": must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errs_.push_back(section_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key) || obj_.at(key).is_null()) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errs_.push_back(section_ + "." + key + ": wrong type");
    }
  }

  void read_range(const char* key, CountRange& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    const auto& v = obj_.at(key);
    try {
      if (v.is_number_unsigned()) {
        out.min = out.max = v.get<std::uint32_t>();
      } else if (v.is_array() && v.size() == 2) {
        out.min = v[0].get<std::uint32_t>();
        out.max = v[1].get<std::uint32_t>();
      } else {
        errs_.push_back(section_ + "." + key + ": expected a count or [min, max]");
      }
    } catch (const nlohmann::json::exception&) {
      errs_.push_back(section_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }
  const nlohmann::json& at(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void reject_unknown() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.contains(k)) errs_.push_back(section_ + "." + k + ": unknown field");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string section_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
};

inline Behavior parse_behavior(const nlohmann::json& v, const std::string& where, std::vector<std::string>& errs) {
  std::string kind;
  double p = 0.5;
  int bit = 1;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else if (v.is_object()) {
    kind = v.value("kind", std::string{});
    if (v.contains("p")) p = v["p"].is_number() ? v["p"].get<double>() : -1.0;
    if (v.contains("bit")) bit = v["bit"].is_number_integer() ? v["bit"].get<int>() : -1;
  }
  if (kind == "honest") return Behavior::honest();
  if (kind == "always-flip") return Behavior::always_flip();
  if (kind == "random-flip") return Behavior::random_flip(p);
  if (kind == "stuck-at") {
    if (bit != 0 && bit != 1) errs.push_back(where + ".bit: must be 0 or 1");
    return Behavior::stuck_at(static_cast<std::uint8_t>(bit == 1));
  }
  errs.push_back(where + ": unknown behavior '" + kind + "'");
  return Behavior::honest();
}

}  // namespace detail

inline SimulationConfig parse_config(const nlohmann::json& j) {
  SimulationConfig cfg;
  std::vector<std::string> errs;
  if (!j.is_object()) throw ConfigError({"<root>: must be an object"});
  static const std::set<std::string> kSections{"sensing", "channel", "churn", "adversary", "crypto", "output"};
  for (const auto& [k, v] : j.items()) {
    if (!kSections.contains(k)) errs.push_back(k + ": unknown section");
  }

  if (j.contains("sensing")) {
    detail::FieldReader r(j["sensing"], "sensing", errs);
    r.read("n", cfg.sensing.n);
    r.read("rounds", cfg.sensing.rounds);
    r.read_optional("seed", cfg.sensing.seed);
    r.read_optional("tau", cfg.sensing.tau);
    std::optional<double> pf, pm;
    r.read_optional("p_f", pf);
    r.read_optional("p_m", pm);
    if (pf.has_value() != pm.has_value()) errs.push_back("sensing.p_f/p_m: give both or neither");
    if (pf && pm) cfg.sensing.profile = DetectionProfile{*pf, *pm};
    r.read("p_busy", cfg.sensing.p_busy);
    r.read("miss_probability", cfg.sensing.miss_probability);
    r.read("reputation", cfg.sensing.reputation);
    r.read_optional("lambda", cfg.sensing.lambda_override);
    r.reject_unknown();
  }
  if (j.contains("crypto")) {
    detail::FieldReader r(j["crypto"], "crypto", errs);
    r.read("domain_bits", cfg.crypto.domain_bits);
    r.read("range_bits", cfg.crypto.range_bits);
    r.read("blck_bits", cfg.crypto.blck_bits);
    r.reject_unknown();
  }
  if (j.contains("channel")) {
    detail::FieldReader r(j["channel"], "channel", errs);
    r.read("mu0", cfg.channel.mu0);
    r.read("mu1", cfg.channel.mu1);
    r.read("min_dbm", cfg.channel.quantization.min_dbm);
    r.read("step_dbm", cfg.channel.quantization.step_dbm);
    std::optional<double> sigma, target;
    r.read_optional("sigma", sigma);
    r.read_optional("target_false_alarm", target);
    if (sigma && target) errs.push_back("channel: give sigma or target_false_alarm, not both");
    if (sigma) cfg.channel.sigma = *sigma;
    if (target) {
      if (cfg.channel.mu0 < cfg.channel.mu1 && *target > 0.0 && *target < 0.5) {
        cfg.channel.sigma = sigma_for_false_alarm(cfg.channel.mu0, cfg.channel.mu1, *target);
      } else {
        errs.push_back("channel.target_false_alarm: must lie in (0,0.5) with mu0 < mu1");
      }
    } else if (!sigma && (r.has("mu0") || r.has("mu1")) && cfg.channel.mu0 < cfg.channel.mu1) {
      cfg.channel.sigma = sigma_for_false_alarm(cfg.channel.mu0, cfg.channel.mu1, 0.1);
    }
    r.reject_unknown();
  }
  cfg.channel.quantization.domain_bits = cfg.crypto.domain_bits;
  if (j.contains("churn")) {
    detail::FieldReader r(j["churn"], "churn", errs);
    r.read("mu", cfg.churn.mu);
    r.read_range("joins", cfg.churn.joins);
    r.read_range("leaves", cfg.churn.leaves);
    r.reject_unknown();
  }
  if (j.contains("adversary")) {
    detail::FieldReader r(j["adversary"], "adversary", errs);
    if (r.has("users")) {
      const auto& users = r.at("users");
      if (!users.is_object()) {
        errs.push_back("adversary.users: must be an object");
      } else {
        for (const auto& [k, v] : users.items()) {
          try {
            auto id = EntityId::parse(k);
            if (!id.is_user()) throw InvalidArgument(k);
            cfg.adversary[id.user_id()] = detail::parse_behavior(v, "adversary.users." + k, errs);
          } catch (const InvalidArgument&) {
            errs.push_back("adversary.users." + k + ": not a user id");
          }
        }
      }
    }
    r.reject_unknown();
  }
  if (j.contains("output")) {
    detail::FieldReader r(j["output"], "output", errs);
    r.read("report", cfg.output.report);
    r.read("transcript", cfg.output.transcript);
    r.reject_unknown();
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return cfg;
}

// Canonical echo of the effective configuration (output paths excluded, so two
// runs writing to different files produce identical reports).
inline nlohmann::ordered_json config_to_json(const SimulationConfig& c) {
  nlohmann::ordered_json j;
  auto profile = c.profile();
  j["sensing"] = {{"n", c.sensing.n},
                  {"rounds", c.sensing.rounds},
                  {"seed", c.seed()},
                  {"tau", c.tau()},
                  {"p_f", profile.false_alarm},
                  {"p_m", profile.missed_detection},
                  {"p_busy", c.sensing.p_busy},
                  {"miss_probability", c.sensing.miss_probability},
                  {"reputation", c.sensing.reputation},
                  {"lambda", c.sensing.lambda_override ? nlohmann::ordered_json(*c.sensing.lambda_override)
                                                       : nlohmann::ordered_json(nullptr)}};
  j["channel"] = {{"mu0", c.channel.mu0},
                  {"mu1", c.channel.mu1},
                  {"sigma", c.channel.sigma},
                  {"min_dbm", c.channel.quantization.min_dbm},
                  {"step_dbm", c.channel.quantization.step_dbm}};
  j["churn"] = {{"mu", c.churn.mu},
                {"joins", {c.churn.joins.min, c.churn.joins.max}},
                {"leaves", {c.churn.leaves.min, c.churn.leaves.max}}};
  nlohmann::ordered_json users = nlohmann::ordered_json::object();
  for (const auto& [u, b] : c.adversary) {
    nlohmann::ordered_json e{{"kind", b.str()}};
    if (b.kind == Behavior::Kind::kRandomFlip) e["p"] = b.flip_probability;
    if (b.kind == Behavior::Kind::kStuckAt) e["bit"] = b.stuck_bit;
    users[EntityId::user(u).str()] = e;
  }
  j["adversary"] = {{"users", users}};
  j["crypto"] = {{"domain_bits", c.crypto.domain_bits},
                 {"range_bits", c.crypto.range_bits},
                 {"blck_bits", c.crypto.blck_bits}};
  return j;
}

}  // namespace lp3pss
