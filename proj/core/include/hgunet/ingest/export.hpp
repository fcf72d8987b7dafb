#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::ingest {

// Canonical re-export: one JSON object per line with the 5-tuple, timestamp,
// label and a name → value feature object in canonical column order.

nlohmann::ordered_json record_to_json(const FlowRecord& r,
                                      const std::vector<std::string>& feature_names);
FlowRecord record_from_json(const nlohmann::ordered_json& j,
                            std::vector<std::string>* feature_names = nullptr);

void write_canonical_jsonl(std::ostream& out, const FlowTable& table);
void write_canonical_jsonl(const std::filesystem::path& path, const FlowTable& table);
FlowTable read_canonical_jsonl(std::istream& in);
FlowTable read_canonical_jsonl(const std::filesystem::path& path);

}  // namespace hgunet::ingest
