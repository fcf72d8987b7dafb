#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hgunet::train {

/// Attack is the positive class; a flow is predicted attack when p ≥ threshold.
inline constexpr double kDecisionThreshold = 0.5;

struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  void add(int label, bool predicted_attack);
  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;

  bool operator==(const Metrics&) const = default;
};

/// Zero denominators give 0 for the affected metric.
Metrics compute_metrics(const Confusion& c);

struct Prediction {
  std::string flow_id;
  double p = 0.0;
  int label = -1;
};

/// Skips entries with label < 0.
Metrics metrics_from_predictions(std::span<const Prediction> predictions, double threshold = kDecisionThreshold);

/// One {"flow_id","p","label"} object per line; p in round-trip precision.
void write_prediction_dump(std::ostream& out, std::span<const Prediction> predictions);
void write_prediction_dump(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_prediction_dump(std::istream& in);
std::vector<Prediction> read_prediction_dump(const std::filesystem::path& path);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n−1)
  /// "0.960 ± 0.014"
  std::string render() const;
};

struct AggregateReport {
  std::size_t folds = 0;
  MetricSummary accuracy, precision, recall, f1;
};

MetricSummary summarize(std::span<const double> values);
/// Needs at least two folds (ConfigError otherwise).
AggregateReport aggregate_folds(std::span<const Metrics> folds);
/// Per-fold rows followed by the mean ± std row.
std::string markdown_report(const std::string& title, std::span<const Metrics> folds, const AggregateReport& agg);

void to_json(nlohmann::json& j, const Confusion& c);
void from_json(const nlohmann::json& j, Confusion& c);
void to_json(nlohmann::json& j, const Metrics& m);
void from_json(const nlohmann::json& j, Metrics& m);
void to_json(nlohmann::json& j, const AggregateReport& r);

}  // namespace hgunet::train
