#pragma once

#include <nlohmann/json.hpp>

#include "hgunet/numeric/parameter.hpp"

namespace hgunet::nn {

inline constexpr int kParameterFormatVersion = 1;

/// {"version": 1, "parameters": {name: {"shape": [r, c], "values": [...]}}}
/// Values are written with round-trip precision, so reloading is bit-exact.
nlohmann::json parameters_to_json(const ParameterRefs& params);
/// Loads into existing parameters by name; every name and shape must match.
void parameters_from_json(const nlohmann::json& j, const ParameterRefs& params);

}  // namespace hgunet::nn
