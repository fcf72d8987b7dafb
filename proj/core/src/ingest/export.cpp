#include "hgunet/ingest/export.hpp"

#include <fstream>

#include "hgunet/error.hpp"

namespace hgunet::ingest {

nlohmann::ordered_json record_to_json(const FlowRecord& r,
                                      const std::vector<std::string>& feature_names) {
  if (feature_names.size() != r.features.size()) {
    throw DimensionError("record " + r.flow_id + " has " + std::to_string(r.features.size()) +
                         " features for " + std::to_string(feature_names.size()) + " names");
  }
  nlohmann::ordered_json features = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < feature_names.size(); ++i) features[feature_names[i]] = r.features[i];
  nlohmann::ordered_json j;
  j["flow_id"] = r.flow_id;
  j["src_ip"] = r.src_ip;
  j["dst_ip"] = r.dst_ip;
  j["src_port"] = r.src_port;
  j["dst_port"] = r.dst_port;
  j["protocol"] = r.protocol;
  j["timestamp"] = r.timestamp_us;
  j["label"] = std::string(to_string(r.label));
  j["features"] = std::move(features);
  return j;
}

FlowRecord record_from_json(const nlohmann::ordered_json& j,
                            std::vector<std::string>* feature_names) {
  FlowRecord r;
  r.flow_id = j.at("flow_id").get<std::string>();
  r.src_ip = j.at("src_ip").get<std::string>();
  r.dst_ip = j.at("dst_ip").get<std::string>();
  r.src_port = j.at("src_port").get<std::uint16_t>();
  r.dst_port = j.at("dst_port").get<std::uint16_t>();
  r.protocol = j.at("protocol").get<std::uint8_t>();
  r.timestamp_us = j.at("timestamp").get<std::int64_t>();
  r.label = label_from_string(j.at("label").get<std::string>());
  std::vector<std::string> names;
  for (const auto& [name, value] : j.at("features").items()) {
    names.push_back(name);
    r.features.push_back(value.get<double>());
  }
  if (feature_names) *feature_names = std::move(names);
  return r;
}

void write_canonical_jsonl(std::ostream& out, const FlowTable& table) {
  for (const auto& r : table.records) out << record_to_json(r, table.feature_names).dump() << '\n';
}

void write_canonical_jsonl(const std::filesystem::path& path, const FlowTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_canonical_jsonl(out, table);
}

FlowTable read_canonical_jsonl(std::istream& in) {
  FlowTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> names;
    FlowRecord r;
    try {
      r = record_from_json(nlohmann::ordered_json::parse(line), &names);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed canonical record: ") + e.what());
    }
    if (first) {
      table.feature_names = std::move(names);
      first = false;
    } else if (names != table.feature_names) {
      throw DataError("canonical record " + r.flow_id + " has a different feature list");
    }
    table.records.push_back(std::move(r));
  }
  return table;
}

FlowTable read_canonical_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_canonical_jsonl(in);
}

}  // namespace hgunet::ingest
