#include "hgunet/graph/window.hpp"

#include <cmath>

#include "hgunet/error.hpp"

namespace hgunet::graph {

void WindowConfig::validate() const {
  if (!(delta_t_s > 0.0) || !std::isfinite(delta_t_s)) {
    throw ConfigError("window delta_t must be > 0 seconds");
  }
  if (max_flows < 1) throw ConfigError("window max_flows must be >= 1");
  if (!(skew_s >= 0.0)) throw ConfigError("window skew must be >= 0");
}

Windower::Windower(WindowConfig cfg)
    : cfg_(cfg),
      delta_us_(static_cast<std::int64_t>(std::llround(cfg.delta_t_s * 1e6))),
      skew_us_(static_cast<std::int64_t>(std::llround(cfg.skew_s * 1e6))) {
  cfg_.validate();
  if (delta_us_ < 1) delta_us_ = 1;
}

Batch Windower::close(CloseReason reason) {
  Batch out = std::move(current_);
  out.reason = reason;
  out.window_id = next_id_++;
  current_ = Batch{};
  return out;
}

std::vector<Batch> Windower::push(ingest::FlowRecord record) {
  std::vector<Batch> closed;
  const std::int64_t ts = record.timestamp_us;
  if (!current_.records.empty()) {
    if (ts < current_.end_us) {
      ++out_of_order_;
      if (current_.end_us - ts > skew_us_) ++skew_violations_;
    } else if (ts - current_.start_us >= delta_us_) {
      closed.push_back(close(CloseReason::Span));
    }
  }
  if (current_.records.empty()) {
    current_.start_us = ts;
    current_.end_us = ts;
  }
  current_.end_us = std::max(current_.end_us, ts);
  current_.records.push_back(std::move(record));
  if (current_.records.size() >= cfg_.max_flows) closed.push_back(close(CloseReason::Size));
  return closed;
}

std::optional<Batch> Windower::flush() {
  if (current_.records.empty()) return std::nullopt;
  return close(CloseReason::Flush);
}

std::vector<Batch> window_batch(const std::vector<ingest::FlowRecord>& records,
                                const WindowConfig& cfg) {
  Windower w(cfg);
  std::vector<Batch> out;
  for (const auto& r : records) {
    for (auto& b : w.push(r)) out.push_back(std::move(b));
  }
  if (auto b = w.flush()) out.push_back(std::move(*b));
  return out;
}

void to_json(nlohmann::json& j, const WindowConfig& c) {
  j = {{"delta_t_s", c.delta_t_s}, {"max_flows", c.max_flows}, {"skew_s", c.skew_s}};
}

void from_json(const nlohmann::json& j, WindowConfig& c) {
  c.delta_t_s = j.value("delta_t_s", c.delta_t_s);
  c.max_flows = j.value("max_flows", c.max_flows);
  c.skew_s = j.value("skew_s", c.skew_s);
}

}  // namespace hgunet::graph
