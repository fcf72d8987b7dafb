#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "hgunet/ingest/parser.hpp"
#include "hgunet/service/alert_store.hpp"
#include "hgunet/service/service_config.hpp"

namespace hgunet::service {

struct StageLatency {
  std::size_t samples = 0;
  double p50_ms = 0.0, p95_ms = 0.0, p99_ms = 0.0, max_ms = 0.0;
};

/// Nearest-rank percentiles over per-window samples.
StageLatency latency_summary(std::vector<double> samples_ms);

struct RunSummary {
  std::string model_version;
  ingest::ParseStats parse;
  std::size_t windows = 0;
  std::size_t flows_scored = 0;
  std::map<std::string, std::size_t> tiers;  // block, rate_limit, alert, none
  std::size_t grey_zone_alerts = 0;
  std::size_t out_of_order = 0;
  double wall_seconds = 0.0;
  double throughput_fps = 0.0;
  double ingest_ms = 0.0;
  std::map<std::string, StageLatency> stages;  // graph_build, inference, decision
  DecisionThresholds thresholds;
};

nlohmann::json summary_to_json(const RunSummary& s);

struct WindowReport {
  std::uint64_t window_id = 0;
  std::size_t flows = 0;
  std::size_t grey_zone_alerts = 0;
};

struct RunOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  /// Alerts are published here as each window closes (live serving).
  AlertStore* live_store = nullptr;
  std::function<void(const WindowReport&)> on_window;
};

/// Replay a flow file through windowing, graph building, inference and the
/// decision engine. Writes to out_dir:
///   forensic.jsonl    hash-chained record per scored flow
///   predictions.jsonl flow_id, p, label
///   verdicts.jsonl    one verdict per scored flow
///   alerts.jsonl      grey-zone alerts with saliency and subgraph
///   flows.jsonl       canonical original records of alerted flows
///   summary.json      tier counts, throughput, stage latencies
/// Throws ConfigError when the bundle's features are not in the schema.
RunSummary run_pipeline(const ServiceConfig& cfg, const RunOptions& opts);

/// First 16 hex chars of the SHA-256 of the checkpoint file.
std::string model_version(const std::filesystem::path& checkpoint);

}  // namespace hgunet::service
