#include "hgunet/numeric/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hgunet/error.hpp"

namespace hgunet::nn {

BceResult bce_loss(std::span<const double> p, std::span<const double> y,
                   std::span<const double> weights) {
  if (p.size() != y.size() || p.size() != weights.size()) {
    throw DimensionError("bce_loss: lengths differ (p=" + std::to_string(p.size()) +
                         ", y=" + std::to_string(y.size()) +
                         ", weights=" + std::to_string(weights.size()) + ")");
  }
  BceResult r;
  r.grad_logits.resize(p.size());
  if (p.empty()) return r;
  const double n = static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += -weights[i] * (y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc));
    r.grad_logits[i] = weights[i] * (p[i] - y[i]) / n;
  }
  r.loss = total / n;
  return r;
}

}  // namespace hgunet::nn
