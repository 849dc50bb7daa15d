#pragma once

// SimulationReport -> JSON. Key order is fixed so that equal runs serialize to
// identical bytes.

#include <string>

#include <nlohmann/json.hpp>

#include "lp3pss/config.hpp"
#include "lp3pss/conformance.hpp"
#include "lp3pss/simulation.hpp"

namespace lp3pss {

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const OpTally& t) {
  return ojson{{"ope_enc", t.ope_enc}, {"aead_enc", t.aead_enc}, {"aead_dec", t.aead_dec},
               {"comparisons", t.comparisons}};
}

inline ojson to_json(const OpCounts& c) {
  ojson j;
  for (auto p : {Phase::kInit, Phase::kSensing, Phase::kMembership}) {
    const auto& t = c[p];
    if (t == OpTally{}) continue;
    j[to_string(p)] = to_json(t);
  }
  return j.is_null() ? ojson::object() : j;
}

inline ojson to_json(const std::map<EntityId, OpCounts>& ops) {
  ojson j = ojson::object();
  for (const auto& [who, c] : ops) j[who.str()] = to_json(c);
  return j;
}

inline ojson to_json(const std::map<std::string, LinkTraffic>& links) {
  ojson j = ojson::object();
  for (const auto& [link, t] : links) j[link] = ojson{{"messages", t.messages}, {"bytes", t.bytes}};
  return j;
}

inline ojson to_json(const RateEstimate& e) {
  if (!e.available) return ojson{{"available", false}};
  return ojson{{"available", true}, {"errors", e.events}, {"trials", e.trials},
               {"value", e.value},  {"ci95_low", e.lower}, {"ci95_high", e.upper}};
}

inline ojson user_list(const std::vector<UserId>& users) {
  ojson j = ojson::array();
  for (auto u : users) j.push_back(u.value);
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const SimulationReport& r) {
  using detail::ojson;
  ojson j;
  j["config"] = config_to_json(r.config);
  j["derived"] = ojson{{"tau", r.tau},
                       {"sigma", r.config.channel.sigma},
                       {"p_f", r.profile.false_alarm},
                       {"p_m", r.profile.missed_detection},
                       {"alpha", r.alpha},
                       {"lambda", r.initial_lambda}};

  auto rates = estimate_error_rates(r);
  j["error_rates"] = ojson{{"q_f", detail::to_json(rates.false_alarm)}, {"q_m", detail::to_json(rates.missed)}};

  auto comp = verify_computation_counts(r);
  auto comm = verify_communication_counts(r);
  auto mismatch_list = [](const ConformanceVerdict& v) {
    ojson a = ojson::array();
    for (const auto& m : v.mismatches) a.push_back(m.str());
    return a;
  };
  j["conformance"] = ojson{{"computation", ojson{{"ok", comp.ok()}, {"mismatches", mismatch_list(comp)}}},
                           {"communication", ojson{{"ok", comm.ok()}, {"mismatches", mismatch_list(comm)}}}};

  ojson leakage;
  leakage["conforms"] = r.leakage.ok();
  ojson per_entity = ojson::object();
  for (const auto& [who, ok] : r.leakage.conforms) per_entity[who.str()] = ok;
  leakage["entities"] = per_entity;
  ojson violations = ojson::array();
  for (const auto& v : r.leakage.violations) violations.push_back(v.reason);
  leakage["violations"] = violations;
  j["leakage"] = leakage;

  j["init_ops"] = detail::to_json(r.init_ops);

  ojson rounds = ojson::array();
  for (const auto& rec : r.rounds) {
    ojson x;
    x["round"] = rec.round;
    x["truth"] = rec.truth == Hypothesis::kPresent ? "present" : "absent";
    x["decision"] = rec.decision ? ojson(to_string(*rec.decision)) : ojson(nullptr);
    x["correct"] = rec.decision ? ojson((*rec.decision == Decision::kBusy) == (rec.truth == Hypothesis::kPresent))
                                : ojson(nullptr);
    if (rec.aborted) x["aborted"] = true;
    x["lambda"] = rec.lambda;
    x["vote_sum"] = rec.vote_sum;
    x["n_live"] = rec.n_live;
    x["n_present"] = rec.n_present;
    x["churn"] = rec.churn;
    x["beta"] = rec.beta;
    x["joins"] = detail::user_list(rec.joins);
    x["leaves"] = detail::user_list(rec.leaves);
    x["ops"] = detail::to_json(rec.ops);
    x["comm"] = ojson{{"logical_ciphertexts", rec.comm.logical_ciphertexts()},
                      {"sensing_bytes", rec.comm.sensing_bytes()},
                      {"sensing", detail::to_json(rec.comm.sensing)},
                      {"membership", detail::to_json(rec.comm.membership)}};
    ojson cred = ojson::object();
    for (const auto& [u, phi] : rec.credibility) cred[EntityId::user(u).str()] = phi;
    x["credibility"] = cred;
    rounds.push_back(std::move(x));
  }
  j["rounds"] = std::move(rounds);

  ojson rep = ojson::object();
  for (const auto& [u, rec] : r.final_reputation) {
    rep[EntityId::user(u).str()] = ojson{{"agree", rec.agree},
                                         {"disagree", rec.disagree},
                                         {"credibility", rec.credibility},
                                         {"weight", rec.weight}};
  }
  j["final_reputation"] = rep;

  ojson diag = ojson::array();
  for (const auto& d : r.diagnostics) diag.push_back(d);
  j["diagnostics"] = diag;
  return j;
}

inline std::string report_to_string(const SimulationReport& r) { return report_to_json(r).dump(2) + "\n"; }

}  // namespace lp3pss
