#pragma once

#include <string>
#include <vector>

#include "hgunet/numeric/matrix.hpp"
#include "hgunet/numeric/rng.hpp"

namespace hgunet::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParameterRefs = std::vector<Parameter*>;

void zero_grads(const ParameterRefs& params);

/// Glorot-uniform fill, the usual init for attention and linear layers.
void glorot_init(Parameter& p, RngStream& rng);

}  // namespace hgunet::nn
