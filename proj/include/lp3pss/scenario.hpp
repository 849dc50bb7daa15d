#pragma once

// Scenario streams: primary-user activity, two-hypothesis Gaussian RSS, membership
// churn and misbehaving users.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "lp3pss/errors.hpp"
#include "lp3pss/fusion.hpp"
#include "lp3pss/ids.hpp"

namespace lp3pss {

using Rng = std::mt19937_64;

// Independent stream for one purpose ("rss", "churn", ...) of one run.
inline Rng make_stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32)};
  return Rng(seq);
}

enum class Hypothesis : std::uint8_t { kAbsent = 0, kPresent = 1 };  // h0 / h1

struct Quantization {
  double min_dbm = -110.0;
  double step_dbm = 0.01;
  unsigned domain_bits = 16;

  std::uint64_t max_value() const { return (std::uint64_t{1} << domain_bits) - 1; }
  double to_dbm(double q) const { return min_dbm + q * step_dbm; }
  double from_dbm(double dbm) const { return (dbm - min_dbm) / step_dbm; }
};

// RSS ~ N(mu0, sigma) under h0 and N(mu1, sigma) under h1, in quantization steps.
struct ChannelModel {
  double mu0 = 1000.0;
  double mu1 = 2000.0;
  double sigma = 390.2;
  Quantization quantization;

  double midpoint() const { return 0.5 * (mu0 + mu1); }

  void validate() const {
    if (!(mu0 < mu1)) throw InvalidArgument("channel: mu0 must be below mu1");
    if (!(sigma > 0.0)) throw InvalidArgument("channel: sigma must be positive");
    if (quantization.domain_bits < 1 || quantization.domain_bits > 32) {
      throw InvalidArgument("channel: domain_bits must be in [1, 32]");
    }
    if (!(quantization.step_dbm > 0.0)) throw InvalidArgument("channel: step_dbm must be positive");
  }

  std::uint64_t quantize(double x) const {
    double r = std::round(x);
    if (r <= 0.0) return 0;
    auto top = static_cast<double>(quantization.max_value());
    if (r >= top) return quantization.max_value();
    return static_cast<std::uint64_t>(r);
  }
};

// sigma such that a threshold at the midpoint has per-user false-alarm probability pf.
inline double sigma_for_false_alarm(double mu0, double mu1, double pf) {
  if (!(pf > 0.0 && pf < 0.5)) throw InvalidArgument("target false-alarm probability must lie in (0, 0.5)");
  boost::math::normal standard;
  double z = boost::math::quantile(standard, 1.0 - pf);
  return 0.5 * (mu1 - mu0) / z;
}

// Per-user (P_f, P_m) of the test "quantized RSS >= tau" under the model.
inline DetectionProfile detection_profile(const ChannelModel& m, std::uint64_t tau) {
  boost::math::normal standard;
  double edge = static_cast<double>(tau) - 0.5;
  DetectionProfile p;
  p.false_alarm = boost::math::cdf(boost::math::complement(standard, (edge - m.mu0) / m.sigma));
  p.missed_detection = boost::math::cdf(standard, (edge - m.mu1) / m.sigma);
  return p;
}

inline std::vector<std::uint64_t> generate_rss(const ChannelModel& m, Hypothesis truth, Rng& rng, std::size_t n) {
  std::normal_distribution<double> dist(truth == Hypothesis::kPresent ? m.mu1 : m.mu0, m.sigma);
  std::vector<std::uint64_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(m.quantize(dist(rng)));
  return out;
}

// ---------------------------------------------------------------------------

struct CountRange {
  std::uint32_t min = 0;
  std::uint32_t max = 0;

  std::uint32_t draw(Rng& rng) const {
    if (min == max) return min;
    return std::uniform_int_distribution<std::uint32_t>(min, max)(rng);
  }
};

// R(t) ~ Bernoulli(mu); when R(t) = 1 the join and leave counts are drawn uniformly.
struct ChurnConfig {
  double mu = 0.0;
  CountRange joins{1, 1};
  CountRange leaves{0, 1};

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("churn: mu must lie in [0,1]");
    if (joins.min > joins.max || leaves.min > leaves.max) throw InvalidArgument("churn: min exceeds max");
    if (mu > 0.0 && joins.max == 0 && leaves.max == 0) throw InvalidArgument("churn: event can never change membership");
  }
};

struct ChurnEvent {
  bool occurred = false;  // R(t)
  std::vector<UserId> joins;
  std::vector<UserId> leaves;

  // beta(t): joiners in a period with R(t) = 1.
  std::size_t beta() const { return occurred ? joins.size() : 0; }
};

// Never leaves the network empty. Fresh ids are taken from next_id.
inline ChurnEvent churn_step(const ChurnConfig& cfg, Rng& rng, const std::set<UserId>& live, UserId& next_id) {
  if (live.empty()) throw InvalidArgument("churn: live set is empty");
  ChurnEvent ev;
  std::bernoulli_distribution r(cfg.mu);
  ev.occurred = r(rng);
  if (!ev.occurred) return ev;

  std::uint32_t j = cfg.joins.draw(rng);
  std::uint32_t l = cfg.leaves.draw(rng);
  l = std::min<std::uint32_t>(l, static_cast<std::uint32_t>(live.size()) - 1);
  if (j == 0 && l == 0 && cfg.joins.max > 0) j = std::max<std::uint32_t>(cfg.joins.min, 1);

  std::vector<UserId> pool(live.begin(), live.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  ev.leaves.assign(pool.begin(), pool.begin() + l);
  std::sort(ev.leaves.begin(), ev.leaves.end());
  for (std::uint32_t i = 0; i < j; ++i) {
    ev.joins.push_back(next_id);
    ++next_id.value;
  }
  if (ev.joins.empty() && ev.leaves.empty()) ev.occurred = false;
  return ev;
}

// ---------------------------------------------------------------------------

struct Behavior {
  enum class Kind : std::uint8_t { kHonest, kAlwaysFlip, kRandomFlip, kStuckAt };

  Kind kind = Kind::kHonest;
  double flip_probability = 0.0;  // kRandomFlip
  std::uint8_t stuck_bit = 0;     // kStuckAt

  static Behavior honest() { return {}; }
  static Behavior always_flip() { return {Kind::kAlwaysFlip}; }
  static Behavior random_flip(double p) { return {Kind::kRandomFlip, p}; }
  static Behavior stuck_at(std::uint8_t b) { return {Kind::kStuckAt, 0.0, b}; }

  std::string str() const {
    switch (kind) {
      case Kind::kHonest:
        return "honest";
      case Kind::kAlwaysFlip:
        return "always-flip";
      case Kind::kRandomFlip:
        return "random-flip";
      case Kind::kStuckAt:
        return "stuck-at";
    }
    return "?";
  }
};

// Users without an entry behave honestly.
using AdversaryProfile = std::map<UserId, Behavior>;

// Misbehaving users cannot see tau, so "flipping" reflects the measured value about
// the model midpoint, their best guess of the threshold.
inline std::uint64_t apply_malice(const AdversaryProfile& profile, UserId user, std::uint64_t rss_q,
                                  const ChannelModel& model, Rng& rng) {
  auto it = profile.find(user);
  if (it == profile.end()) return rss_q;
  const auto& b = it->second;
  auto reflect = [&] { return model.quantize(2.0 * model.midpoint() - static_cast<double>(rss_q)); };
  switch (b.kind) {
    case Behavior::Kind::kHonest:
      return rss_q;
    case Behavior::Kind::kAlwaysFlip:
      return reflect();
    case Behavior::Kind::kRandomFlip: {
      std::bernoulli_distribution flip(b.flip_probability);
      return flip(rng) ? reflect() : rss_q;
    }
    case Behavior::Kind::kStuckAt:
      return b.stuck_bit ? model.quantization.max_value() : 0;
  }
  return rss_q;
}

}  // namespace lp3pss
