#pragma once

#include <string>

#include "hgunet/numeric/matrix.hpp"
#include "hgunet/numeric/parameter.hpp"
#include "hgunet/numeric/rng.hpp"

namespace hgunet::nn {

// Every layer pairs forward() with an analytic backward(). Forward returns
// whatever backward needs in a cache struct so layers stay re-entrant.

class Linear {
 public:
  struct Cache {
    Matrix input;
  };

  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out, RngStream& rng);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  /// Accumulates weight/bias grads, returns grad w.r.t. the input.
  Matrix backward(const Cache& cache, const Matrix& grad_out);

  std::size_t in_features() const { return weight.value.rows(); }
  std::size_t out_features() const { return weight.value.cols(); }
  void collect(ParameterRefs& out) { out.push_back(&weight); out.push_back(&bias); }

  Parameter weight;  // in × out
  Parameter bias;    // 1 × out
};

inline constexpr double kLayerNormEps = 1e-5;

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    std::vector<double> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(std::string name, std::size_t width);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& grad_out);

  void collect(ParameterRefs& out) { out.push_back(&gain); out.push_back(&bias); }

  Parameter gain;  // 1 × width
  Parameter bias;  // 1 × width
};

/// Free-function form: per-row normalization then affine transform.
Matrix layer_norm(const Matrix& x, const Parameter& gain, const Parameter& bias,
                  LayerNorm::Cache* cache = nullptr);
Matrix layer_norm_backward(const LayerNorm::Cache& cache, Parameter& gain, Parameter& bias,
                           const Matrix& grad_out);

struct DropoutCache {
  Matrix mask;  // 0 or 1/(1-rate); empty when dropout was a no-op
};

/// Inverted dropout. Identity when !training or rate == 0.
Matrix dropout(const Matrix& x, double rate, bool training, RngStream* rng,
               DropoutCache* cache = nullptr);
Matrix dropout_backward(const DropoutCache& cache, const Matrix& grad_out);

}  // namespace hgunet::nn
