#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::ingest {

struct ColumnMapping {
  std::string source;     // header name in the flow file
  std::string canonical;  // name used everywhere downstream
};

struct LabelPattern {
  std::string regex;
  Label label;
};

/// Declarative description of one flow-file layout. Shipped as JSON data
/// files under schemas/, never hard-coded.
struct FeatureSchema {
  std::string name;
  std::optional<std::string> flow_id_column;
  std::string src_ip_column;
  std::string dst_ip_column;
  std::string src_port_column;
  std::string dst_port_column;
  std::string protocol_column;
  std::string timestamp_column;
  std::string label_column;
  std::vector<ColumnMapping> columns;
  std::map<std::string, Label> label_mapping;
  std::vector<LabelPattern> label_patterns;
  std::vector<std::string> default_subset;
  std::vector<std::string> web_ddos_indicators;

  std::vector<std::string> canonical_names() const;
  /// Source label string → canonical label; throws DataError when unknown.
  Label map_source_label(const std::string& source_label) const;
  /// Default descriptor subset plus any Web-DDoS indicators the schema names.
  std::vector<std::string> default_feature_subset() const;

  void validate() const;
};

FeatureSchema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const FeatureSchema& s);
FeatureSchema load_schema_file(const std::filesystem::path& path);
/// Accepts a path to a JSON file or the name of a bundled schema.
FeatureSchema resolve_schema(const std::string& name_or_path);
std::vector<std::filesystem::path> schema_search_dirs();

/// Source label → canonical label under a policy. nullopt = record excluded.
std::optional<Label> map_label(const FeatureSchema& schema, const std::string& source_label,
                               LabelPolicy policy);

}  // namespace hgunet::ingest
