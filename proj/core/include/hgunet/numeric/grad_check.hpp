#pragma once

#include <functional>
#include <string>

#include "hgunet/error.hpp"
#include "hgunet/numeric/parameter.hpp"

namespace hgunet::nn {

class CheckInvalidError : public Error {
 public:
  using Error::Error;
};

struct GradCheckOptions {
  double step = 1e-4;
  /// Denominator floor for the relative error |a − n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Check at most this many entries per parameter (0 = all), strided evenly.
  std::size_t max_entries_per_param = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

/// Central finite differences over every parameter entry vs. the analytic
/// gradient. `loss` must be deterministic; `loss_and_grad` must zero and then
/// populate the parameter grads for the same loss.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& loss_and_grad,
                           const ParameterRefs& params, double tolerance,
                           const GradCheckOptions& opts = {});

}  // namespace hgunet::nn
