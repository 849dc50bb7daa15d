#pragma once

// Measured-versus-expected checks over a SimulationReport, the symbolic cost
// model of the four compared schemes, and fused error-rate estimation.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lp3pss/errors.hpp"
#include "lp3pss/simulation.hpp"

namespace lp3pss {

struct Mismatch {
  std::uint64_t round = 0;
  std::string entity;
  std::string field;
  std::uint64_t expected = 0;
  std::uint64_t measured = 0;

  std::string str() const {
    return "round " + std::to_string(round) + " " + entity + " " + field + ": expected " + std::to_string(expected) +
           ", measured " + std::to_string(measured);
  }
};

struct ConformanceVerdict {
  std::size_t rounds_checked = 0;
  std::vector<Mismatch> mismatches;

  bool ok() const { return mismatches.empty(); }
};

namespace detail {

inline void expect_eq(ConformanceVerdict& v, std::uint64_t round, const std::string& who, const char* field,
                      std::uint64_t expected, std::uint64_t measured) {
  if (expected != measured) v.mismatches.push_back({round, who, field, expected, measured});
}

inline OpCounts counts_of(const RoundRecord& r, EntityId e) {
  auto it = r.ops.find(e);
  return it == r.ops.end() ? OpCounts{} : it->second;
}

}  // namespace detail

// Per-round computational overhead against the LP-3PSS row:
//   FC  D + beta (E + OPE_E), counting sensing and membership work in the round
//   SU  OPE_E + E, for every user that reported
//   GW  n D + E, n being the reports it received
inline ConformanceVerdict verify_computation_counts(const SimulationReport& report) {
  ConformanceVerdict v;
  for (const auto& r : report.rounds) {
    if (r.aborted) continue;
    ++v.rounds_checked;
    const auto t = r.round;

    auto fc = detail::counts_of(r, EntityId::fusion_center());
    auto fc_sense = fc[Phase::kSensing];
    auto fc_member = fc[Phase::kMembership];
    detail::expect_eq(v, t, "FC", "aead_dec", 1, fc_sense.aead_dec + fc_member.aead_dec);
    detail::expect_eq(v, t, "FC", "aead_enc", r.beta, fc_sense.aead_enc + fc_member.aead_enc);
    detail::expect_eq(v, t, "FC", "ope_enc", r.beta, fc_sense.ope_enc + fc_member.ope_enc);

    auto gw = detail::counts_of(r, EntityId::gateway())[Phase::kSensing];
    detail::expect_eq(v, t, "GW", "aead_dec", r.reports_sent, gw.aead_dec);
    detail::expect_eq(v, t, "GW", "aead_enc", 1, gw.aead_enc);
    detail::expect_eq(v, t, "GW", "ope_enc", 0, gw.ope_enc);
    detail::expect_eq(v, t, "GW", "comparisons", r.n_present, gw.comparisons);

    for (const auto& [u, rss] : r.reported_rss) {
      auto su = detail::counts_of(r, EntityId::user(u))[Phase::kSensing];
      auto who = EntityId::user(u).str();
      detail::expect_eq(v, t, who, "ope_enc", 1, su.ope_enc);
      detail::expect_eq(v, t, who, "aead_enc", 1, su.aead_enc);
      detail::expect_eq(v, t, who, "aead_dec", 0, su.aead_dec);
    }
  }
  return v;
}

// Sensing-phase framing of one round: n_present reports and one decision vector.
inline std::uint64_t expected_sensing_bytes(std::size_t reports, std::size_t n_live, std::size_t ope_bytes) {
  return reports * (kAeadFramingBytes + ope_bytes) + kAeadFramingBytes + 2 * ((n_live + 7) / 8);
}

// Per-round communication overhead: reports + 1 logical ciphertexts, and the wire
// bytes those ciphertexts occupy.
inline ConformanceVerdict verify_communication_counts(const SimulationReport& report) {
  ConformanceVerdict v;
  OpeKey probe;
  probe.domain_bits = report.config.crypto.domain_bits;
  probe.range_bits = report.config.crypto.range_bits;
  const auto w = probe.ciphertext_bytes();
  for (const auto& r : report.rounds) {
    if (r.aborted) continue;
    ++v.rounds_checked;
    detail::expect_eq(v, r.round, "all", "logical_ciphertexts", r.reports_sent + 1, r.comm.logical_ciphertexts());
    detail::expect_eq(v, r.round, "all", "sensing_bytes", expected_sensing_bytes(r.reports_sent, r.n_live, w),
                      r.comm.sensing_bytes());
  }
  return v;
}

// ---------------------------------------------------------------------------
// Analytical model

enum class Scheme : std::uint8_t { kLp3pss, kLpos, kPpss, kPdaft };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kLp3pss:
      return "lp3pss";
    case Scheme::kLpos:
      return "lpos";
    case Scheme::kPpss:
      return "ppss";
    case Scheme::kPdaft:
      return "pdaft";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "lp3pss") return Scheme::kLp3pss;
  if (s == "lpos") return Scheme::kLpos;
  if (s == "ppss") return Scheme::kPpss;
  if (s == "pdaft") return Scheme::kPdaft;
  throw InvalidArgument("unknown scheme '" + s + "'");
}

struct AnalyticalCostParams {
  unsigned kappa = 80;
  unsigned p_bits = 1024;
  unsigned n_bits = 1024;
  unsigned q_bits = 192;
  unsigned ope_bits = 128;
  unsigned blck_bits = 256;
  unsigned gamma = 10;
  unsigned y = 3;  // PDAFT decryption servers
  double mu = 0.2;
  unsigned beta = 5;
  std::size_t n = 50;

  void validate() const {
    if (!kappa || !p_bits || !n_bits || !q_bits || !ope_bits || !blck_bits || !gamma || !y) {
      throw InvalidArgument("cost parameters must be positive");
    }
    if (n == 0) throw InvalidArgument("cost model needs n >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("mu must lie in [0,1]");
  }
};

struct PrimitiveCount {
  std::string entity;  // "FC", "SU", "GW"
  std::string primitive;
  double count = 0.0;
};

struct CostReport {
  Scheme scheme = Scheme::kLp3pss;
  std::size_t n = 0;
  std::vector<PrimitiveCount> ops;
  double comm_bits = 0.0;

  double count(const std::string& entity, const std::string& primitive) const {
    for (const auto& o : ops) {
      if (o.entity == entity && o.primitive == primitive) return o.count;
    }
    return 0.0;
  }
};

inline CostReport analytical_cost(Scheme scheme, const AnalyticalCostParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n);
  const double beta = p.beta;
  const double gamma = p.gamma;
  const double log_n = std::log2(n);
  CostReport r;
  r.scheme = scheme;
  r.n = p.n;
  switch (scheme) {
    case Scheme::kLp3pss:
      r.ops = {{"FC", "D", 1}, {"FC", "E", beta}, {"FC", "OPE_E", beta}, {"SU", "OPE_E", 1},
               {"SU", "E", 1}, {"GW", "D", n},    {"GW", "E", 1}};
      r.comm_bits = (n + 1) * p.blck_bits;
      break;
    case Scheme::kLpos:
      r.ops = {{"FC", "Mulp", 0.5 * (2 + log_n) * gamma * p.p_bits},
               {"SU", "Mulp", 2 * gamma * p.p_bits + 2 * gamma},
               {"SU", "OPE_E", 1},
               {"SU", "PMulQ", 2 * p.mu * log_n}};
      r.comm_bits = 2 * gamma * p.p_bits * (2 + log_n) + n * p.ope_bits + p.mu * p.q_bits * log_n;
      break;
    case Scheme::kPpss:
      r.ops = {{"FC", "H", 1},
               {"FC", "Mulp", n + 2},
               {"FC", "Expp", std::ldexp(1.0, static_cast<int>(p.gamma) - 1) * n + 2},
               {"SU", "H", 1},
               {"SU", "Expp", 2},
               {"SU", "Mulp", 1}};
      r.comm_bits = p.p_bits * n + beta * p.mu * p.p_bits * n;
      break;
    case Scheme::kPdaft:
      r.ops = {{"FC", "ExpN2", 2}, {"FC", "InvN2", 1}, {"FC", "MulN2", static_cast<double>(p.y)},
               {"SU", "ExpN2", 2}, {"SU", "MulN2", 1}, {"GW", "MulN2", n}};
      r.comm_bits = p.n_bits * (2 * (n + 1) + beta);
      break;
  }
  return r;
}

// scheme,n,entity,primitive,count,comm_bits. Operation rows leave comm_bits empty;
// each (scheme, n) closes with an "all,comm" row carrying the bit count.
inline std::string costs_csv(const std::vector<CostReport>& reports) {
  auto num = [](double x) {
    if (x == std::floor(x) && std::fabs(x) < 1e15) return std::to_string(static_cast<long long>(x));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  std::string out = "scheme,n,entity,primitive,count,comm_bits\n";
  for (const auto& r : reports) {
    const std::string prefix = std::string(to_string(r.scheme)) + "," + std::to_string(r.n) + ",";
    for (const auto& o : r.ops) out += prefix + o.entity + "," + o.primitive + "," + num(o.count) + ",\n";
    out += prefix + "all,comm,," + num(r.comm_bits) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error rates

struct RateEstimate {
  bool available = false;
  std::uint64_t events = 0;  // wrong fused decisions
  std::uint64_t trials = 0;  // rounds under the conditioning hypothesis
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Wilson score interval at 95%.
inline RateEstimate wilson(std::uint64_t events, std::uint64_t trials) {
  RateEstimate e;
  e.events = events;
  e.trials = trials;
  if (trials == 0) return e;
  e.available = true;
  constexpr double z = 1.959964;
  const double nn = static_cast<double>(trials);
  const double p = static_cast<double>(events) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  e.value = p;
  e.lower = std::max(0.0, centre - half);
  e.upper = std::min(1.0, centre + half);
  return e;
}

struct ErrorRates {
  RateEstimate false_alarm;  // Q_f = Pr(busy | absent)
  RateEstimate missed;       // Q_m = Pr(free | present)
};

// Rounds without a decision are skipped.
inline ErrorRates estimate_error_rates(const SimulationReport& report) {
  std::uint64_t h0 = 0, h1 = 0, fa = 0, md = 0;
  for (const auto& r : report.rounds) {
    if (!r.decision) continue;
    if (r.truth == Hypothesis::kAbsent) {
      ++h0;
      if (*r.decision == Decision::kBusy) ++fa;
    } else {
      ++h1;
      if (*r.decision == Decision::kFree) ++md;
    }
  }
  return {wilson(fa, h0), wilson(md, h1)};
}

}  // namespace lp3pss
