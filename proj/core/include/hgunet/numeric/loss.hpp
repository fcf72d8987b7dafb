#pragma once

#include <span>
#include <vector>

namespace hgunet::nn {

inline constexpr double kProbabilityClamp = 1e-7;

struct BceResult {
  double loss = 0.0;
  /// d loss / d logit for each entry: weight·(p − y)/n.
  std::vector<double> grad_logits;
};

/// Weighted mean binary cross-entropy over probabilities p (clamped to
/// [1e-7, 1 − 1e-7]) with targets y in {0, 1}.
BceResult bce_loss(std::span<const double> p, std::span<const double> y,
                   std::span<const double> weights);

}  // namespace hgunet::nn
