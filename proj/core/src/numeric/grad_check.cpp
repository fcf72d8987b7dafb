#include "hgunet/numeric/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hgunet::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& loss_and_grad,
                           const ParameterRefs& params, double tolerance,
                           const GradCheckOptions& opts) {
  const double first = loss();
  const double second = loss();
  if (first != second) {
    throw CheckInvalidError("grad_check: forward is not deterministic (" +
                            std::to_string(first) + " vs " + std::to_string(second) + ")");
  }

  loss_and_grad();
  GradCheckReport report;
  for (Parameter* p : params) {
    const Matrix analytic = p->grad;
    auto values = p->value.values();
    const std::size_t n = values.size();
    std::size_t stride = 1;
    if (opts.max_entries_per_param > 0 && n > opts.max_entries_per_param) {
      stride = (n + opts.max_entries_per_param - 1) / opts.max_entries_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + opts.step;
      const double up = loss();
      values[i] = saved - opts.step;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic.values()[i];
      const double err = relative_error(a, numeric, opts.floor);
      ++report.entries_checked;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = p->name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace hgunet::nn
