#include "hgunet/service/alert_store.hpp"

#include "hgunet/error.hpp"

namespace hgunet::service {

std::string_view to_string(AnalystAction a) {
  switch (a) {
    case AnalystAction::Approve: return "approve";
    case AnalystAction::Block: return "block";
    case AnalystAction::RateLimit: return "rate_limit";
  }
  return "?";
}

AnalystAction analyst_action_from_string(std::string_view s) {
  if (s == "approve") return AnalystAction::Approve;
  if (s == "block") return AnalystAction::Block;
  if (s == "rate_limit") return AnalystAction::RateLimit;
  throw DataError("unknown analyst action '" + std::string(s) + "'");
}

nlohmann::ordered_json feedback_to_json(const FeedbackRecord& f) {
  nlohmann::ordered_json j;
  j["alert_id"] = f.alert_id;
  j["flow_id"] = f.flow_id;
  j["action"] = to_string(f.action);
  j["rationale"] = f.rationale;
  j["analyst"] = f.analyst;
  j["submitted_at"] = f.submitted_at;
  return j;
}

FeedbackRecord feedback_from_json(const nlohmann::json& j) {
  try {
    FeedbackRecord f;
    f.alert_id = j.value("alert_id", "");
    f.flow_id = j.value("flow_id", "");
    f.action = analyst_action_from_string(j.at("action").get<std::string>());
    f.rationale = j.value("rationale", "");
    f.analyst = j.value("analyst", "");
    f.submitted_at = j.value("submitted_at", "");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feedback record: ") + e.what());
  }
}

nlohmann::ordered_json alert_to_json(const Alert& a) {
  nlohmann::ordered_json j;
  j["id"] = a.id;
  j["seq"] = a.seq;
  j["window_id"] = a.window_id;
  j["flow"] = a.flow;
  j["p"] = a.p;
  j["action"] = a.action;
  j["issued_at"] = a.issued_at_us;
  j["top_features"] = a.top_features;
  j["subgraph"] = a.subgraph;
  return j;
}

Alert alert_from_json(const nlohmann::json& j) {
  try {
    Alert a;
    a.id = j.at("id").get<std::string>();
    a.seq = j.at("seq").get<std::uint64_t>();
    a.window_id = j.value("window_id", std::uint64_t{0});
    a.flow = j.at("flow");
    a.p = j.at("p").get<double>();
    a.action = j.value("action", "");
    a.issued_at_us = j.value("issued_at", std::int64_t{0});
    a.top_features = j.value("top_features", nlohmann::ordered_json::array());
    a.subgraph = j.value("subgraph", nlohmann::json::object());
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("alert record: ") + e.what());
  }
}

void AlertStore::attach_feedback_log(const std::filesystem::path& path) {
  std::unique_lock lock(mu_);
  feedback_log_.open(path, std::ios::app);
  if (!feedback_log_) throw IoError("cannot open feedback log " + path.string());
}

void AlertStore::add(Alert alert) {
  std::unique_lock lock(mu_);
  if (by_id_.count(alert.id)) throw ConsistencyError("duplicate alert id " + alert.id);
  by_id_[alert.id] = alert.seq;
  alerts_[alert.seq] = std::move(alert);
}

std::size_t AlertStore::size() const {
  std::shared_lock lock(mu_);
  return alerts_.size();
}

std::vector<Alert> AlertStore::page(std::size_t page, std::size_t page_size) const {
  std::shared_lock lock(mu_);
  std::vector<Alert> out;
  if (page == 0 || page_size == 0) return out;
  std::size_t skip = (page - 1) * page_size;
  for (auto it = alerts_.rbegin(); it != alerts_.rend() && out.size() < page_size; ++it) {
    if (skip > 0) {
      --skip;
      continue;
    }
    out.push_back(it->second);
  }
  return out;
}

std::optional<Alert> AlertStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return alerts_.at(it->second);
}

void AlertStore::apply_feedback(const FeedbackRecord& record, bool amendment) {
  Alert& a = alerts_.at(by_id_.at(record.alert_id));
  if (amendment) {
    a.amendments.push_back(record);
  } else {
    a.verdict = record;
  }
}

FeedbackOutcome AlertStore::submit(const std::string& id, FeedbackRecord record, FeedbackRecord* existing) {
  std::unique_lock lock(mu_);
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return FeedbackOutcome::NotFound;
  Alert& a = alerts_.at(it->second);
  record.alert_id = id;
  record.flow_id = a.flow_id();
  const bool amendment = a.verdict.has_value();
  apply_feedback(record, amendment);
  if (feedback_log_.is_open()) {
    auto line = feedback_to_json(record);
    line["kind"] = amendment ? "amendment" : "verdict";
    feedback_log_ << line.dump() << '\n';
    feedback_log_.flush();
  }
  if (amendment) {
    if (existing) *existing = *a.verdict;
    return FeedbackOutcome::Conflict;
  }
  if (existing) *existing = record;
  return FeedbackOutcome::Created;
}

void AlertStore::set_summary(nlohmann::json summary) {
  std::unique_lock lock(mu_);
  summary_ = std::move(summary);
}

nlohmann::json AlertStore::summary() const {
  std::shared_lock lock(mu_);
  return summary_;
}

void AlertStore::load_run(AlertStore& store, const std::filesystem::path& run_dir) {
  const auto alerts_path = run_dir / "alerts.jsonl";
  std::ifstream alerts(alerts_path);
  if (!alerts) throw IoError("no alerts.jsonl in " + run_dir.string());
  std::string line;
  while (std::getline(alerts, line)) {
    if (!line.empty()) store.add(alert_from_json(nlohmann::json::parse(line)));
  }
  if (std::ifstream fb(run_dir / "feedback.jsonl"); fb) {
    std::unique_lock lock(store.mu_);
    while (std::getline(fb, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      auto record = feedback_from_json(j);
      if (!store.by_id_.count(record.alert_id)) continue;
      const bool has_verdict = store.alerts_.at(store.by_id_.at(record.alert_id)).verdict.has_value();
      store.apply_feedback(record, has_verdict);
    }
  }
  if (std::ifstream s(run_dir / "summary.json"); s) store.set_summary(nlohmann::json::parse(s));
}

}  // namespace hgunet::service
