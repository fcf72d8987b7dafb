#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace hgunet::service {

/// Ordered by severity.
enum class Action : std::uint8_t { None = 0, Alert = 1, RateLimit = 2, Block = 3 };

std::string_view to_string(Action a);
Action action_from_string(std::string_view s);

struct DecisionThresholds {
  double tau_analyst = 0.5;
  double tau_auto = 0.9;
  double notify_floor = 0.2;
  /// Grey-zone flows also get a provisional rate limit; off = tag only.
  bool grey_zone_rate_limit = true;
  double expiry_s = 300.0;

  /// 0 ≤ notify_floor ≤ tau_analyst < tau_auto ≤ 1; ConfigError otherwise.
  void validate() const;
};

struct Decision {
  Action action = Action::None;
  bool analyst_alert = false;  // grey zone: routed to the analyst queue
  bool operator==(const Decision&) const = default;
};

/// p ≥ tau_auto → block; [tau_analyst, tau_auto) → rate limit + analyst
/// alert; [notify_floor, tau_analyst) → alert; below → none.
/// Throws DataError for p outside [0,1] (NaN included).
Decision decide(double p, const DecisionThresholds& t);

enum class VerdictSource : std::uint8_t { Auto, Analyst };
std::string_view to_string(VerdictSource s);

struct Verdict {
  std::string flow_id;
  double p = 0.0;
  Action action = Action::None;
  bool analyst_alert = false;
  std::int64_t issued_at_us = 0;
  std::optional<std::int64_t> expires_at_us;  // set for automatic enforcement
  VerdictSource source = VerdictSource::Auto;
};

/// Automatic verdict at stream time `issued_at_us`; block and rate-limit
/// expire after t.expiry_s unless renewed.
Verdict make_verdict(std::string flow_id, double p, const DecisionThresholds& t, std::int64_t issued_at_us);

nlohmann::ordered_json verdict_to_json(const Verdict& v);

void to_json(nlohmann::json& j, const DecisionThresholds& t);
void from_json(const nlohmann::json& j, DecisionThresholds& t);

}  // namespace hgunet::service
