#include "hgunet/service/service_config.hpp"

#include <charconv>
#include <fstream>

#include "hgunet/error.hpp"

namespace hgunet::service {

void ServiceConfig::validate() const {
  thresholds.validate();
  if (window) window->validate();
  if (memory) memory->validate();
  if (!(speed >= 0.0)) throw ConfigError("service: speed must be non-negative");
  if (subgraph.max_nodes == 0) throw ConfigError("service: subgraph max_nodes must be positive");
  parse_listen(listen);
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = {{"model", c.model_path},
       {"thresholds", c.thresholds},
       {"speed", c.speed},
       {"top_features", c.top_features},
       {"subgraph", {{"hops", c.subgraph.hops}, {"max_nodes", c.subgraph.max_nodes}}},
       {"listen", c.listen}};
  if (c.schema) j["schema"] = *c.schema;
  if (c.window) j["window"] = *c.window;
  if (c.memory) j["memory"] = *c.memory;
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  ServiceConfig d;
  c.model_path = j.value("model", d.model_path);
  if (j.contains("schema")) c.schema = j.at("schema").get<std::string>();
  if (j.contains("window")) c.window = j.at("window").get<graph::WindowConfig>();
  if (j.contains("memory")) c.memory = j.at("memory").get<graph::MemoryConfig>();
  c.thresholds = j.value("thresholds", d.thresholds);
  c.speed = j.value("speed", d.speed);
  c.top_features = j.value("top_features", d.top_features);
  if (j.contains("subgraph")) {
    c.subgraph.hops = j.at("subgraph").value("hops", d.subgraph.hops);
    c.subgraph.max_nodes = j.at("subgraph").value("max_nodes", d.subgraph.max_nodes);
  }
  c.listen = j.value("listen", d.listen);
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read service config " + path.string());
  ServiceConfig cfg;
  try {
    cfg = nlohmann::json::parse(in).get<ServiceConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("service config " + path.string() + ": " + e.what());
  }
  if (!cfg.model_path.empty() && std::filesystem::path(cfg.model_path).is_relative()) {
    cfg.model_path = (path.parent_path() / cfg.model_path).string();
  }
  cfg.validate();
  return cfg;
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("listen address must be host:port, got '" + listen + "'");
  int port = -1;
  const char* first = listen.data() + colon + 1;
  const char* last = listen.data() + listen.size();
  const auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port < 0 || port > 65535) {
    throw ConfigError("bad port in listen address '" + listen + "'");
  }
  return {listen.substr(0, colon), port};
}

}  // namespace hgunet::service
