#include "hgunet/numeric/layers.hpp"

#include <cmath>

#include "hgunet/error.hpp"
#include "hgunet/numeric/ops.hpp"

namespace hgunet::nn {

void zero_grads(const ParameterRefs& params) {
  for (Parameter* p : params) p->zero_grad();
}

void glorot_init(Parameter& p, RngStream& rng) {
  const double fan = static_cast<double>(p.value.rows() + p.value.cols());
  const double limit = std::sqrt(6.0 / fan);
  for (double& v : p.value.values()) v = rng.uniform(-limit, limit);
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, RngStream& rng)
    : weight(name + ".weight", Matrix(in, out)), bias(name + ".bias", Matrix(1, out)) {
  glorot_init(weight, rng);
}

Matrix Linear::forward(const Matrix& x, Cache* cache) const {
  if (x.cols() != weight.value.rows()) {
    throw DimensionError(weight.name + ": input " + x.shape_str() + " does not match weight " +
                         weight.value.shape_str());
  }
  if (cache) cache->input = x;
  return add_row(matmul(x, weight.value), bias.value);
}

Matrix Linear::backward(const Cache& cache, const Matrix& grad_out) {
  add_inplace(weight.grad, matmul_tn(cache.input, grad_out));
  add_inplace(bias.grad, column_sums(grad_out));
  return matmul_nt(grad_out, weight.value);
}

LayerNorm::LayerNorm(std::string name, std::size_t width)
    : gain(name + ".gain", Matrix(1, width, 1.0)), bias(name + ".bias", Matrix(1, width)) {}

Matrix LayerNorm::forward(const Matrix& x, Cache* cache) const {
  return layer_norm(x, gain, bias, cache);
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& grad_out) {
  return layer_norm_backward(cache, gain, bias, grad_out);
}

Matrix layer_norm(const Matrix& x, const Parameter& gain, const Parameter& bias,
                  LayerNorm::Cache* cache) {
  const std::size_t w = x.cols();
  if (gain.value.cols() != w || bias.value.cols() != w) {
    throw DimensionError("layer_norm: gain/bias width " + gain.value.shape_str() +
                         " does not match input " + x.shape_str());
  }
  Matrix normalized(x.rows(), w);
  std::vector<double> inv_std(x.rows());
  Matrix out(x.rows(), w);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(w);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < w; ++j) {
      const double n = (r[j] - mean) * is;
      normalized(i, j) = n;
      out(i, j) = n * gain.value(0, j) + bias.value(0, j);
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Matrix layer_norm_backward(const LayerNorm::Cache& cache, Parameter& gain, Parameter& bias,
                           const Matrix& grad_out) {
  const Matrix& xhat = cache.normalized;
  const std::size_t w = xhat.cols();
  const double n = static_cast<double>(w);
  Matrix grad_in(xhat.rows(), w);
  std::vector<double> dxhat(w);
  for (std::size_t i = 0; i < xhat.rows(); ++i) {
    double sum_d = 0.0;
    double sum_dx = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      const double g = grad_out(i, j);
      gain.grad(0, j) += g * xhat(i, j);
      bias.grad(0, j) += g;
      dxhat[j] = g * gain.value(0, j);
      sum_d += dxhat[j];
      sum_dx += dxhat[j] * xhat(i, j);
    }
    const double is = cache.inv_std[i];
    for (std::size_t j = 0; j < w; ++j) {
      grad_in(i, j) = is / n * (n * dxhat[j] - sum_d - xhat(i, j) * sum_dx);
    }
  }
  return grad_in;
}

Matrix dropout(const Matrix& x, double rate, bool training, RngStream* rng, DropoutCache* cache) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    if (cache) cache->mask = Matrix();
    return x;
  }
  if (!rng) throw ConfigError("dropout in training mode requires an rng stream");
  Matrix mask(x.rows(), x.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = rng->uniform() < rate ? 0.0 : keep_scale;
  Matrix out = mul(x, mask);
  if (cache) cache->mask = std::move(mask);
  return out;
}

Matrix dropout_backward(const DropoutCache& cache, const Matrix& grad_out) {
  if (cache.mask.empty()) return grad_out;
  return mul(grad_out, cache.mask);
}

}  // namespace hgunet::nn
