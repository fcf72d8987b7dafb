#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hgunet/numeric/parameter.hpp"

namespace hgunet::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; first/second moments are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void step(const ParameterRefs& params);
  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return opts_; }
  void set_lr(double lr) { opts_.lr = lr; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamOptions opts_;
  std::int64_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

void to_json(nlohmann::json& j, const AdamOptions& o);
void from_json(const nlohmann::json& j, AdamOptions& o);

}  // namespace hgunet::nn
