#include "hgunet/service/feedback_export.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

#include "hgunet/error.hpp"
#include "hgunet/ingest/export.hpp"
#include "hgunet/service/alert_store.hpp"

namespace hgunet::service {

ingest::FlowTable collect_feedback(const std::filesystem::path& run_dir, ExportStats* stats) {
  ExportStats local;
  ExportStats& st = stats ? *stats : local;

  ingest::FlowTable originals;
  if (std::filesystem::exists(run_dir / "flows.jsonl")) originals = ingest::read_canonical_jsonl(run_dir / "flows.jsonl");
  std::unordered_map<std::string, std::size_t> by_flow;
  for (std::size_t i = 0; i < originals.records.size(); ++i) by_flow.emplace(originals.records[i].flow_id, i);

  ingest::FlowTable out;
  out.feature_names = originals.feature_names;
  std::ifstream fb(run_dir / "feedback.jsonl");
  if (!fb) return out;  // no feedback yet
  std::set<std::string> decided;
  std::string line;
  while (std::getline(fb, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto record = feedback_from_json(j);
    if (j.value("kind", "verdict") == "amendment" || !decided.insert(record.alert_id).second) {
      ++st.amendments_ignored;
      continue;
    }
    if (record.action == AnalystAction::RateLimit) {
      ++st.excluded_rate_limit;
      continue;
    }
    const auto it = by_flow.find(record.flow_id);
    if (it == by_flow.end()) {
      ++st.skipped_missing;
      continue;
    }
    ingest::FlowRecord r = originals.records[it->second];
    r.label = record.action == AnalystAction::Approve ? ingest::Label::Benign : ingest::Label::Attack;
    out.records.push_back(std::move(r));
    ++st.exported;
  }
  return out;
}

ExportStats export_feedback(const std::filesystem::path& run_dir, const std::filesystem::path& out) {
  ExportStats stats;
  const auto table = collect_feedback(run_dir, &stats);
  ingest::write_canonical_jsonl(out, table);
  return stats;
}

}  // namespace hgunet::service
