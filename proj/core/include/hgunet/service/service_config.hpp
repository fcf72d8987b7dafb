#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hgunet/graph/graph_json.hpp"
#include "hgunet/graph/memory.hpp"
#include "hgunet/graph/window.hpp"
#include "hgunet/service/decision.hpp"

namespace hgunet::service {

/// The single declarative service file. Window and memory settings default
/// to the ones stored in the model bundle.
struct ServiceConfig {
  std::string model_path;
  std::optional<std::string> schema;  // override the bundle's schema
  std::optional<graph::WindowConfig> window;
  std::optional<graph::MemoryConfig> memory;
  DecisionThresholds thresholds;
  double speed = 0.0;  // replay multiplier; 0 = as fast as possible
  std::size_t top_features = 5;
  graph::SubgraphOptions subgraph;
  std::string listen = "127.0.0.1:8080";

  void validate() const;
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);
/// Relative model paths are resolved against the config file's directory.
ServiceConfig load_service_config(const std::filesystem::path& path);

/// "host:port" → pair; ConfigError when malformed.
std::pair<std::string, int> parse_listen(const std::string& listen);

}  // namespace hgunet::service
