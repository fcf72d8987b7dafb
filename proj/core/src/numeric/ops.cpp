#include "hgunet/numeric/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hgunet/error.hpp"

namespace hgunet::nn {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  auto src = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Matrix out(a.rows(), a.cols());
  auto x = a.values();
  auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + a.shape_str() + " x " + b.shape_str());
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: shape mismatch " + a.shape_str() + "^T x " + b.shape_str());
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k).data();
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: shape mismatch " + a.shape_str() + " x " + b.shape_str() +
                         "^T");
  }
  Matrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix mul(const Matrix& a, const Matrix& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& a, double s) {
  return map(a, [s](double x) { return x * s; });
}

void add_inplace(Matrix& dst, const Matrix& src, double s) {
  require_same_shape(dst, src, "add_inplace");
  auto d = dst.values();
  auto v = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * v[i];
}

Matrix add_row(const Matrix& x, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("add_row: cannot broadcast " + row.shape_str() + " onto " +
                         x.shape_str());
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row(0, j);
  }
  return out;
}

Matrix column_sums(const Matrix& x) {
  Matrix s(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) s(0, j) += r[j];
  }
  return s;
}

Matrix leaky_relu(const Matrix& x, double slope) {
  return map(x, [slope](double v) { return v > 0.0 ? v : slope * v; });
}

Matrix leaky_relu_backward(const Matrix& x, const Matrix& grad_out, double slope) {
  return zip(x, grad_out, "leaky_relu_backward",
             [slope](double v, double g) { return v > 0.0 ? g : slope * g; });
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  return map(x, [](double v) { return sigmoid(v); });
}

Matrix sigmoid_backward(const Matrix& y, const Matrix& grad_out) {
  return zip(y, grad_out, "sigmoid_backward", [](double s, double g) { return g * s * (1.0 - s); });
}

Matrix exp(const Matrix& x) {
  return map(x, [](double v) { return std::exp(v); });
}

Matrix exp_backward(const Matrix& y, const Matrix& grad_out) {
  return zip(y, grad_out, "exp_backward", [](double e, double g) { return g * e; });
}

Matrix tanh(const Matrix& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Matrix tanh_backward(const Matrix& y, const Matrix& grad_out) {
  return zip(y, grad_out, "tanh_backward", [](double t, double g) { return g * (1.0 - t * t); });
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(rows[i]) + " out of range for " +
                           x.shape_str());
    }
    std::copy_n(x.row(rows[i]).data(), x.cols(), out.row(i).data());
  }
  return out;
}

Matrix scatter_rows(const Matrix& src, std::span<const std::size_t> rows, std::size_t n_rows) {
  if (rows.size() != src.rows()) {
    throw DimensionError("scatter_rows: " + std::to_string(rows.size()) + " indices for " +
                         src.shape_str());
  }
  Matrix out(n_rows, src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows) {
      throw DimensionError("scatter_rows: index " + std::to_string(rows[i]) +
                           " out of range for " + std::to_string(n_rows) + " rows");
    }
    std::copy_n(src.row(i).data(), src.cols(), out.row(rows[i]).data());
  }
  return out;
}

Matrix scale_rows(const Matrix& x, std::span<const double> factors) {
  if (factors.size() != x.rows()) {
    throw DimensionError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                         x.shape_str());
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v *= factors[i];
  return out;
}

double order_invariant_sum(std::span<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

SegmentIndex SegmentIndex::build(std::span<const std::size_t> segment_ids) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < segment_ids.size(); ++i) groups[segment_ids[i]].push_back(i);
  SegmentIndex index;
  index.members.reserve(groups.size());
  for (auto& [key, members] : groups) index.members.push_back(std::move(members));
  return index;
}

std::size_t SegmentIndex::positions() const {
  std::size_t n = 0;
  for (const auto& m : members) n += m.size();
  return n;
}

std::vector<double> segment_softmax(std::span<const double> scores,
                                    std::span<const std::size_t> segment_ids) {
  if (scores.size() != segment_ids.size()) {
    throw DimensionError("segment_softmax: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(segment_ids.size()) + " segment ids");
  }
  return segment_softmax(scores, SegmentIndex::build(segment_ids));
}

std::vector<double> segment_softmax(std::span<const double> scores, const SegmentIndex& index) {
  if (index.positions() != scores.size()) {
    throw DimensionError("segment_softmax: segment index does not cover the scores");
  }
  std::vector<double> out(scores.size());
  std::vector<double> buf;
  for (const auto& members : index.members) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i : members) mx = std::max(mx, scores[i]);
    buf.clear();
    for (std::size_t i : members) {
      out[i] = std::exp(scores[i] - mx);
      buf.push_back(out[i]);
    }
    const double z = order_invariant_sum(buf);
    for (std::size_t i : members) out[i] /= z;
  }
  return out;
}

std::vector<double> segment_softmax_backward(std::span<const double> output,
                                             std::span<const double> grad_out,
                                             std::span<const std::size_t> segment_ids) {
  if (output.size() != segment_ids.size()) {
    throw DimensionError("segment_softmax_backward: length mismatch");
  }
  return segment_softmax_backward(output, grad_out, SegmentIndex::build(segment_ids));
}

std::vector<double> segment_softmax_backward(std::span<const double> output,
                                             std::span<const double> grad_out,
                                             const SegmentIndex& index) {
  if (output.size() != grad_out.size() || index.positions() != output.size()) {
    throw DimensionError("segment_softmax_backward: length mismatch");
  }
  std::vector<double> grad(output.size());
  for (const auto& members : index.members) {
    double dot = 0.0;
    for (std::size_t i : members) dot += output[i] * grad_out[i];
    for (std::size_t i : members) grad[i] = output[i] * (grad_out[i] - dot);
  }
  return grad;
}

}  // namespace hgunet::nn
