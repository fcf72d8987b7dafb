#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/graph/builder.hpp"
#include "hgunet/graph/memory.hpp"
#include "hgunet/graph/window.hpp"
#include "hgunet/ingest/flow_record.hpp"
#include "hgunet/ingest/standardizer.hpp"
#include "hgunet/model/hgunet.hpp"

namespace hgunet::train {

/// Everything inference needs: weights plus the feature selection,
/// standardizer and graph settings the weights were trained under.
struct DetectorBundle {
  model::HGUNet model;
  std::string schema;
  std::vector<std::string> features;  // canonical names, standardizer input order
  ingest::Standardizer standardizer;
  ingest::LabelPolicy label_policy = ingest::LabelPolicy::BinarySuspiciousAsAttack;
  graph::WindowConfig window;
  graph::MemoryConfig memory;
  graph::BuildOptions build;
  nlohmann::json provenance = nlohmann::json::object();

  /// Throws ConfigError when the pieces disagree (feature widths etc.).
  void validate() const;
};

nlohmann::json bundle_to_json(DetectorBundle& b);
DetectorBundle bundle_from_json(const nlohmann::json& j);
void save_bundle(DetectorBundle& b, const std::filesystem::path& path);
DetectorBundle load_bundle(const std::filesystem::path& path);

}  // namespace hgunet::train
