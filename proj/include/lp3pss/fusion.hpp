#pragma once

// Half-voting threshold, weighted hard-decision fusion and beta reputation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lp3pss/errors.hpp"
#include "lp3pss/ids.hpp"

namespace lp3pss {

// Per-user local detector quality.
struct DetectionProfile {
  double false_alarm = 0.1;     // P_f
  double missed_detection = 0.1;  // P_m

  double detection() const { return 1.0 - missed_detection; }

  void validate() const {
    if (!(false_alarm > 0.0 && false_alarm < 1.0)) throw InvalidArgument("P_f must lie in (0,1)");
    if (!(missed_detection > 0.0 && missed_detection < 1.0)) throw InvalidArgument("P_m must lie in (0,1)");
    if (!(false_alarm + missed_detection < 1.0)) throw InvalidArgument("P_f + P_m must be < 1");
  }
};

// alpha = ln(P_f / (1 - P_m)) / ln(P_m / (1 - P_f))
inline double compute_alpha(const DetectionProfile& p) {
  if (!(p.false_alarm > 0.0 && p.false_alarm < 1.0) || !(p.missed_detection > 0.0 && p.missed_detection < 1.0)) {
    throw InvalidArgument("P_f and P_m must lie in (0,1)");
  }
  double denom = std::log(p.missed_detection / (1.0 - p.false_alarm));
  if (denom == 0.0) throw InvalidArgument("alpha undefined: P_m == 1 - P_f");
  p.validate();
  return std::log(p.false_alarm / (1.0 - p.missed_detection)) / denom;
}

// lambda_opt = min(n, ceil(n / (1 + alpha)))
inline std::size_t compute_lambda(std::size_t n, double alpha) {
  if (n == 0) throw InvalidArgument("voting threshold needs at least one user");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  double q = std::ceil(static_cast<double>(n) / (1.0 + alpha));
  auto lambda = static_cast<std::size_t>(q);
  if (lambda < 1) lambda = 1;
  return std::min(n, lambda);
}

enum class Decision : std::uint8_t { kFree = 0, kBusy = 1 };

inline const char* to_string(Decision d) { return d == Decision::kBusy ? "busy" : "free"; }

struct FusionOutcome {
  Decision decision = Decision::kFree;
  double vote_sum = 0.0;
  std::size_t lambda = 0;
};

// dec = busy iff sum_i w_i b_i >= lambda.
inline FusionOutcome fuse_votes(std::span<const double> weights, std::span<const std::uint8_t> bits,
                                std::size_t lambda) {
  if (weights.size() != bits.size()) throw InvalidArgument("weights and bits differ in length");
  FusionOutcome out;
  out.lambda = lambda;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (weights[i] < 0.0) throw InvalidArgument("weights must be non-negative");
    if (bits[i]) out.vote_sum += weights[i];
  }
  out.decision = out.vote_sum >= static_cast<double>(lambda) ? Decision::kBusy : Decision::kFree;
  return out;
}

// Beta reputation state of one user.
struct ReputationRecord {
  std::uint64_t agree = 0;     // rho
  std::uint64_t disagree = 0;  // eta
  double credibility = 0.5;    // phi = (rho + 1) / (rho + eta + 2)
  double weight = 1.0;

  static double credibility_of(std::uint64_t agree, std::uint64_t disagree) {
    return (static_cast<double>(agree) + 1.0) / (static_cast<double>(agree + disagree) + 2.0);
  }

  bool operator==(const ReputationRecord&) const = default;
};

using ReputationTable = std::map<UserId, ReputationRecord>;

// One user's contribution to a round; absent users are simply not listed.
struct PresentBit {
  UserId user;
  std::uint8_t bit = 0;
};

// rho += 1 when the user's bit agrees with the decision, eta += 1 otherwise; phi recomputed.
// Weights are left to compute_weights.
inline void update_reputation(ReputationTable& records, std::span<const PresentBit> bits, Decision decision) {
  auto dec_bit = static_cast<std::uint8_t>(decision);
  for (const auto& pb : bits) {
    auto it = records.find(pb.user);
    if (it == records.end()) continue;
    auto& r = it->second;
    if (pb.bit == dec_bit) {
      ++r.agree;
    } else {
      ++r.disagree;
    }
    r.credibility = ReputationRecord::credibility_of(r.agree, r.disagree);
  }
}

// w_i = n_live * phi_i / sum_j phi_j, so uniform credibility gives all-ones weights.
inline std::vector<double> compute_weights(std::span<const double> credibility) {
  if (credibility.empty()) throw InvalidArgument("no credibility values");
  double total = std::accumulate(credibility.begin(), credibility.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("credibility values must be positive");
  auto n = static_cast<double>(credibility.size());
  std::vector<double> w;
  w.reserve(credibility.size());
  for (double phi : credibility) w.push_back(n * phi / total);
  return w;
}

inline void refresh_weights(ReputationTable& records) {
  if (records.empty()) return;
  std::vector<double> phi;
  phi.reserve(records.size());
  for (const auto& [id, r] : records) phi.push_back(r.credibility);
  auto w = compute_weights(phi);
  std::size_t i = 0;
  for (auto& [id, r] : records) r.weight = w[i++];
}

}  // namespace lp3pss
