#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hgunet::service {

enum class AnalystAction : std::uint8_t { Approve, Block, RateLimit };
std::string_view to_string(AnalystAction a);
/// Throws DataError for anything but approve / block / rate_limit.
AnalystAction analyst_action_from_string(std::string_view s);

struct FeedbackRecord {
  std::string alert_id;
  std::string flow_id;
  AnalystAction action = AnalystAction::Approve;
  std::string rationale;
  std::string analyst;
  std::string submitted_at;  // UTC ISO-8601, wall clock
};

nlohmann::ordered_json feedback_to_json(const FeedbackRecord& f);
FeedbackRecord feedback_from_json(const nlohmann::json& j);

struct Alert {
  std::string id;  // "a<seq>"
  std::uint64_t seq = 0;
  std::uint64_t window_id = 0;
  nlohmann::ordered_json flow;  // flow_id, 5-tuple, timestamp
  double p = 0.0;
  std::string action;
  std::int64_t issued_at_us = 0;
  nlohmann::ordered_json top_features = nlohmann::ordered_json::array();
  nlohmann::json subgraph = nlohmann::json::object();
  std::optional<FeedbackRecord> verdict;
  std::vector<FeedbackRecord> amendments;

  std::string flow_id() const { return flow.value("flow_id", ""); }
};

/// Everything but verdict/amendments, as persisted in alerts.jsonl.
nlohmann::ordered_json alert_to_json(const Alert& a);
Alert alert_from_json(const nlohmann::json& j);

enum class FeedbackOutcome { Created, NotFound, Conflict };

/// Grey-zone alert queue. Reads run concurrently; writes take an exclusive
/// lock, so feedback for an alert is serialized and the first verdict wins.
class AlertStore {
 public:
  AlertStore() = default;

  /// Persist feedback (verdicts and amendments) to this JSONL file.
  void attach_feedback_log(const std::filesystem::path& path);

  void add(Alert alert);
  std::size_t size() const;
  /// Newest first; page is 1-based.
  std::vector<Alert> page(std::size_t page, std::size_t page_size) const;
  std::optional<Alert> get(const std::string& id) const;

  /// Later submissions for an adjudicated alert are kept as amendments and
  /// reported as Conflict; `existing` receives the winning verdict.
  FeedbackOutcome submit(const std::string& id, FeedbackRecord record, FeedbackRecord* existing = nullptr);

  void set_summary(nlohmann::json summary);
  nlohmann::json summary() const;

  /// alerts.jsonl (+ feedback.jsonl, summary.json when present) from a run dir.
  static void load_run(AlertStore& store, const std::filesystem::path& run_dir);

 private:
  void apply_feedback(const FeedbackRecord& record, bool amendment);

  mutable std::shared_mutex mu_;
  std::map<std::uint64_t, Alert> alerts_;
  std::map<std::string, std::uint64_t> by_id_;
  nlohmann::json summary_ = nlohmann::json::object();
  std::ofstream feedback_log_;
};

}  // namespace hgunet::service
