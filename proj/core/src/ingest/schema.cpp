#include "hgunet/ingest/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hgunet/error.hpp"

namespace hgunet::ingest {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> FeatureSchema::canonical_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.canonical);
  return names;
}

Label FeatureSchema::map_source_label(const std::string& source_label) const {
  const std::string key = trim(source_label);
  if (auto it = label_mapping.find(key); it != label_mapping.end()) return it->second;
  const std::string lkey = lower(key);
  for (const auto& [k, v] : label_mapping) {
    if (lower(k) == lkey) return v;
  }
  for (const auto& p : label_patterns) {
    if (std::regex_match(key, std::regex(p.regex, std::regex::icase))) return p.label;
  }
  throw DataError("unknown label '" + source_label + "' for schema " + name);
}

std::vector<std::string> FeatureSchema::default_feature_subset() const {
  std::vector<std::string> subset = default_subset;
  const auto names = canonical_names();
  for (const auto& w : web_ddos_indicators) {
    if (std::find(names.begin(), names.end(), w) != names.end() &&
        std::find(subset.begin(), subset.end(), w) == subset.end()) {
      subset.push_back(w);
    }
  }
  return subset;
}

void FeatureSchema::validate() const {
  if (name.empty()) throw SchemaError("schema has no name");
  if (columns.empty()) throw SchemaError("schema " + name + " selects no feature columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.canonical).second) {
      throw SchemaError("schema " + name + ": duplicate canonical feature '" + c.canonical + "'");
    }
  }
  for (const auto& s : default_subset) {
    if (!seen.count(s)) {
      throw SchemaError("schema " + name + ": default subset names unknown feature '" + s + "'");
    }
  }
  for (const auto& p : label_patterns) {
    try {
      std::regex re(p.regex);
    } catch (const std::regex_error&) {
      throw SchemaError("schema " + name + ": bad label pattern '" + p.regex + "'");
    }
  }
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  s.name = j.at("name").get<std::string>();
  const auto& id = j.at("identity");
  if (id.contains("flow_id") && !id.at("flow_id").is_null()) {
    s.flow_id_column = id.at("flow_id").get<std::string>();
  }
  s.src_ip_column = id.at("src_ip").get<std::string>();
  s.dst_ip_column = id.at("dst_ip").get<std::string>();
  s.src_port_column = id.at("src_port").get<std::string>();
  s.dst_port_column = id.at("dst_port").get<std::string>();
  s.protocol_column = id.at("protocol").get<std::string>();
  s.timestamp_column = id.at("timestamp").get<std::string>();
  s.label_column = j.at("label_column").get<std::string>();
  for (const auto& c : j.at("columns")) {
    s.columns.push_back({c.at("source").get<std::string>(), c.at("name").get<std::string>()});
  }
  for (const auto& [k, v] : j.at("label_mapping").items()) {
    s.label_mapping.emplace(k, label_from_string(v.get<std::string>()));
  }
  if (j.contains("label_patterns")) {
    for (const auto& p : j.at("label_patterns")) {
      s.label_patterns.push_back(
          {p.at("regex").get<std::string>(), label_from_string(p.at("label").get<std::string>())});
    }
  }
  s.default_subset = j.value("default_subset", std::vector<std::string>{});
  s.web_ddos_indicators = j.value("web_ddos_indicators", std::vector<std::string>{});
  s.validate();
  return s;
}

nlohmann::json schema_to_json(const FeatureSchema& s) {
  nlohmann::json id = {{"src_ip", s.src_ip_column},     {"dst_ip", s.dst_ip_column},
                       {"src_port", s.src_port_column}, {"dst_port", s.dst_port_column},
                       {"protocol", s.protocol_column}, {"timestamp", s.timestamp_column}};
  id["flow_id"] = s.flow_id_column ? nlohmann::json(*s.flow_id_column) : nlohmann::json();
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : s.columns) cols.push_back({{"source", c.source}, {"name", c.canonical}});
  nlohmann::json mapping = nlohmann::json::object();
  for (const auto& [k, v] : s.label_mapping) mapping[k] = std::string(to_string(v));
  nlohmann::json patterns = nlohmann::json::array();
  for (const auto& p : s.label_patterns) {
    patterns.push_back({{"regex", p.regex}, {"label", std::string(to_string(p.label))}});
  }
  return {{"name", s.name},
          {"identity", id},
          {"label_column", s.label_column},
          {"columns", cols},
          {"label_mapping", mapping},
          {"label_patterns", patterns},
          {"default_subset", s.default_subset},
          {"web_ddos_indicators", s.web_ddos_indicators}};
}

FeatureSchema load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return schema_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> schema_search_dirs() {
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("HGUNET_SCHEMA_DIR")) dirs.emplace_back(env);
  dirs.emplace_back(HGUNET_SOURCE_SCHEMA_DIR);
  dirs.emplace_back(HGUNET_SCHEMA_DIR);
  return dirs;
}

FeatureSchema resolve_schema(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::is_regular_file(p)) return load_schema_file(p);
  for (const auto& dir : schema_search_dirs()) {
    auto candidate = dir / (name_or_path + ".json");
    if (std::filesystem::is_regular_file(candidate)) return load_schema_file(candidate);
  }
  throw SchemaError("no schema named '" + name_or_path + "'");
}

std::optional<Label> map_label(const FeatureSchema& schema, const std::string& source_label,
                               LabelPolicy policy) {
  return apply_label_policy(schema.map_source_label(source_label), policy);
}

}  // namespace hgunet::ingest
