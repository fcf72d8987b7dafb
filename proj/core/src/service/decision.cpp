#include "hgunet/service/decision.hpp"

#include <cmath>

#include "hgunet/error.hpp"

namespace hgunet::service {

std::string_view to_string(Action a) {
  switch (a) {
    case Action::None: return "none";
    case Action::Alert: return "alert";
    case Action::RateLimit: return "rate_limit";
    case Action::Block: return "block";
  }
  return "?";
}

Action action_from_string(std::string_view s) {
  if (s == "none") return Action::None;
  if (s == "alert") return Action::Alert;
  if (s == "rate_limit") return Action::RateLimit;
  if (s == "block") return Action::Block;
  throw DataError("unknown action '" + std::string(s) + "'");
}

std::string_view to_string(VerdictSource s) { return s == VerdictSource::Auto ? "auto" : "analyst"; }

void DecisionThresholds::validate() const {
  const auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!prob(tau_analyst) || !prob(tau_auto) || !prob(notify_floor)) {
    throw ConfigError("thresholds must lie in [0,1]");
  }
  if (!(tau_analyst < tau_auto)) throw ConfigError("tau_analyst must be below tau_auto");
  if (notify_floor > tau_analyst) throw ConfigError("notify_floor must not exceed tau_analyst");
  if (!(expiry_s > 0.0) || !std::isfinite(expiry_s)) throw ConfigError("verdict expiry must be positive");
}

Decision decide(double p, const DecisionThresholds& t) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("decide: probability " + std::to_string(p) + " outside [0,1]");
  if (p >= t.tau_auto) return {Action::Block, false};
  if (p >= t.tau_analyst) return {t.grey_zone_rate_limit ? Action::RateLimit : Action::Alert, true};
  if (p >= t.notify_floor) return {Action::Alert, false};
  return {Action::None, false};
}

Verdict make_verdict(std::string flow_id, double p, const DecisionThresholds& t, std::int64_t issued_at_us) {
  const Decision d = decide(p, t);
  Verdict v;
  v.flow_id = std::move(flow_id);
  v.p = p;
  v.action = d.action;
  v.analyst_alert = d.analyst_alert;
  v.issued_at_us = issued_at_us;
  if (d.action == Action::Block || d.action == Action::RateLimit) {
    v.expires_at_us = issued_at_us + static_cast<std::int64_t>(std::llround(t.expiry_s * 1e6));
  }
  return v;
}

nlohmann::ordered_json verdict_to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["flow_id"] = v.flow_id;
  j["p"] = v.p;
  j["action"] = to_string(v.action);
  j["analyst_alert"] = v.analyst_alert;
  j["source"] = to_string(v.source);
  j["issued_at"] = v.issued_at_us;
  j["expires_at"] = v.expires_at_us ? nlohmann::ordered_json(*v.expires_at_us) : nlohmann::ordered_json(nullptr);
  return j;
}

void to_json(nlohmann::json& j, const DecisionThresholds& t) {
  j = {{"tau_analyst", t.tau_analyst}, {"tau_auto", t.tau_auto}, {"notify_floor", t.notify_floor},
       {"grey_zone_rate_limit", t.grey_zone_rate_limit}, {"expiry_s", t.expiry_s}};
}

void from_json(const nlohmann::json& j, DecisionThresholds& t) {
  DecisionThresholds d;
  t.tau_analyst = j.value("tau_analyst", d.tau_analyst);
  t.tau_auto = j.value("tau_auto", d.tau_auto);
  t.notify_floor = j.value("notify_floor", d.notify_floor);
  t.grey_zone_rate_limit = j.value("grey_zone_rate_limit", d.grey_zone_rate_limit);
  t.expiry_s = j.value("expiry_s", d.expiry_s);
}

}  // namespace hgunet::service
