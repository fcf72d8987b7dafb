#include "hgunet/numeric/adam.hpp"

#include <cmath>

namespace hgunet::nn {

void Adam::step(const ParameterRefs& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    Moments& mom = it->second;
    if (inserted || !mom.m.same_shape(p->value)) {
      mom.m = Matrix(p->value.rows(), p->value.cols());
      mom.v = Matrix(p->value.rows(), p->value.cols());
    }
    auto w = p->value.values();
    auto g = p->grad.values();
    auto m = mom.m.values();
    auto v = mom.v.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

void to_json(nlohmann::json& j, const AdamOptions& o) {
  j = {{"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}};
}

void from_json(const nlohmann::json& j, AdamOptions& o) {
  o.lr = j.value("lr", o.lr);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.eps = j.value("eps", o.eps);
}

}  // namespace hgunet::nn
