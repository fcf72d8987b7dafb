#include "hgunet/model/config.hpp"

#include <algorithm>
#include <cmath>

#include "hgunet/error.hpp"

namespace hgunet::model {

void ModelConfig::validate() const {
  if (host_dim == 0 || flow_dim == 0) throw ConfigError("model: input widths must be positive");
  if (hidden_dim == 0 || heads == 0) throw ConfigError("model: hidden_dim and heads must be positive");
  if (hidden_dim % heads != 0) {
    throw ConfigError("model: hidden_dim " + std::to_string(hidden_dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (pool_ratios.size() != depth) {
    throw ConfigError("model: " + std::to_string(pool_ratios.size()) + " pool ratios for depth " +
                      std::to_string(depth));
  }
  for (double r : pool_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("model: pool ratio " + std::to_string(r) + " outside (0,1]");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("model: dropout_rate outside [0,1)");
  if (!(pool_noise_std >= 0.0) || !std::isfinite(pool_noise_std)) {
    throw ConfigError("model: pool_noise_std must be finite and non-negative");
  }
  if (!std::isfinite(leaky_slope)) throw ConfigError("model: leaky_slope must be finite");
  if (head_dims.size() != 3 || head_dims[0] == 0 || head_dims[1] == 0 || head_dims[2] != 1) {
    throw ConfigError("model: head_dims must be three widths ending in 1");
  }
  if (bottleneck_layers == 0) throw ConfigError("model: at least one bottleneck layer");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"host_dim", c.host_dim},
                     {"flow_dim", c.flow_dim},
                     {"hidden_dim", c.hidden_dim},
                     {"heads", c.heads},
                     {"depth", c.depth},
                     {"pool_ratios", c.pool_ratios},
                     {"dropout_rate", c.dropout_rate},
                     {"pool_noise_std", c.pool_noise_std},
                     {"leaky_slope", c.leaky_slope},
                     {"head_dims", c.head_dims},
                     {"bottleneck_layers", c.bottleneck_layers},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.host_dim = j.value("host_dim", d.host_dim);
  c.flow_dim = j.value("flow_dim", d.flow_dim);
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.heads = j.value("heads", d.heads);
  c.depth = j.value("depth", d.depth);
  c.pool_ratios = j.value("pool_ratios", d.pool_ratios);
  c.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  c.pool_noise_std = j.value("pool_noise_std", d.pool_noise_std);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.head_dims = j.value("head_dims", d.head_dims);
  c.bottleneck_layers = j.value("bottleneck_layers", d.bottleneck_layers);
  c.seed = j.value("seed", d.seed);
}

std::size_t pooled_count(double ratio, std::size_t n) {
  if (n == 0) return 0;
  // Guard against products like 0.4*50 landing a hair above an integer.
  const double k = std::ceil(ratio * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

}  // namespace hgunet::model
