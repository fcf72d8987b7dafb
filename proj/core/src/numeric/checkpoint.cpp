#include "hgunet/numeric/checkpoint.hpp"

#include <unordered_map>

#include "hgunet/error.hpp"

namespace hgunet::nn {

nlohmann::json parameters_to_json(const ParameterRefs& params) {
  nlohmann::json table = nlohmann::json::object();
  for (const Parameter* p : params) {
    auto vals = p->value.values();
    table[p->name] = {{"shape", {p->value.rows(), p->value.cols()}},
                      {"values", std::vector<double>(vals.begin(), vals.end())}};
  }
  return {{"version", kParameterFormatVersion}, {"parameters", std::move(table)}};
}

void parameters_from_json(const nlohmann::json& j, const ParameterRefs& params) {
  if (j.value("version", 0) != kParameterFormatVersion) {
    throw ConfigError("parameter file: unsupported version " + j.value("version", nlohmann::json()).dump());
  }
  const auto& table = j.at("parameters");
  if (table.size() != params.size()) {
    throw ConfigError("parameter file holds " + std::to_string(table.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    auto it = table.find(p->name);
    if (it == table.end()) throw ConfigError("parameter file is missing '" + p->name + "'");
    const auto shape = it->at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
      throw DimensionError("parameter '" + p->name + "' has shape " + it->at("shape").dump() +
                           ", model expects " + p->value.shape_str());
    }
    auto values = it->at("values").get<std::vector<double>>();
    p->value = Matrix(shape[0], shape[1], std::move(values));
    p->grad = Matrix(shape[0], shape[1]);
  }
}

}  // namespace hgunet::nn
