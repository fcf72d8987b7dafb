#include "hgunet/train/bundle.hpp"

#include <fstream>

#include "hgunet/error.hpp"

namespace hgunet::train {

void DetectorBundle::validate() const {
  if (standardizer.input_names != features) throw ConfigError("bundle: standardizer was fit on different features");
  if (standardizer.output_width() != model.config().flow_dim) {
    throw ConfigError("bundle: standardizer emits " + std::to_string(standardizer.output_width()) +
                      " features, model expects " + std::to_string(model.config().flow_dim));
  }
  if (build.host_dim != model.config().host_dim) throw ConfigError("bundle: host feature width disagrees with model");
  window.validate();
  memory.validate();
}

nlohmann::json bundle_to_json(DetectorBundle& b) {
  b.validate();
  return {{"format", "hgunet-bundle"},
          {"schema", b.schema},
          {"features", b.features},
          {"standardizer", b.standardizer},
          {"label_policy", std::string(ingest::to_string(b.label_policy))},
          {"window", b.window},
          {"memory", b.memory},
          {"build", b.build},
          {"provenance", b.provenance},
          {"model", model::model_to_json(b.model)}};
}

DetectorBundle bundle_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "hgunet-bundle") {
    throw SchemaError("bundle: missing or unknown format tag");
  }
  try {
    DetectorBundle b{model::model_from_json(j.at("model")),
                     j.at("schema").get<std::string>(),
                     j.at("features").get<std::vector<std::string>>(),
                     j.at("standardizer").get<ingest::Standardizer>(),
                     ingest::label_policy_from_string(j.at("label_policy").get<std::string>()),
                     j.at("window").get<graph::WindowConfig>(),
                     j.at("memory").get<graph::MemoryConfig>(),
                     j.at("build").get<graph::BuildOptions>(),
                     j.value("provenance", nlohmann::json::object())};
    b.validate();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bundle: ") + e.what());
  }
}

void save_bundle(DetectorBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write bundle " + path.string());
  out << bundle_to_json(b).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

DetectorBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read bundle " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("bundle " + path.string() + ": " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace hgunet::train
