#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace hgunet::model {

struct ModelConfig {
  std::size_t host_dim = 4;     // d_h
  std::size_t flow_dim = 8;     // d_f
  std::size_t hidden_dim = 64;
  std::size_t heads = 4;
  std::size_t depth = 3;
  std::vector<double> pool_ratios = {0.5, 0.4, 0.32};
  double dropout_rate = 0.3;
  double pool_noise_std = 0.01;
  double leaky_slope = 0.2;
  std::vector<std::size_t> head_dims = {64, 32, 1};
  std::size_t bottleneck_layers = 1;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// max(1, ceil(ratio·n)) for n > 0, else 0.
std::size_t pooled_count(double ratio, std::size_t n);

}  // namespace hgunet::model
