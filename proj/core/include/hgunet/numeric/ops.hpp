#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hgunet/numeric/matrix.hpp"

namespace hgunet::nn {

inline constexpr double kDefaultLeakySlope = 0.2;

// ---- products ------------------------------------------------------------
// Backward of c = a·b with upstream g: grad_a = g·bᵀ, grad_b = aᵀ·g.

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// ---- elementwise ---------------------------------------------------------

Matrix add(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void add_inplace(Matrix& dst, const Matrix& src, double s = 1.0);
/// x + broadcast(row) where row is 1×cols.
Matrix add_row(const Matrix& x, const Matrix& row);
/// Column sums as a 1×cols matrix.
Matrix column_sums(const Matrix& x);

Matrix leaky_relu(const Matrix& x, double slope = kDefaultLeakySlope);
/// Gradient through leaky_relu given the forward input x.
Matrix leaky_relu_backward(const Matrix& x, const Matrix& grad_out, double slope = kDefaultLeakySlope);
Matrix sigmoid(const Matrix& x);
/// Gradient through sigmoid given the forward output y.
Matrix sigmoid_backward(const Matrix& y, const Matrix& grad_out);
Matrix exp(const Matrix& x);
/// Gradient through exp given the forward output y.
Matrix exp_backward(const Matrix& y, const Matrix& grad_out);
Matrix tanh(const Matrix& x);
Matrix tanh_backward(const Matrix& y, const Matrix& grad_out);

double sigmoid(double x);

// ---- row plumbing --------------------------------------------------------

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows);
/// Zero matrix with n_rows rows; row i of src lands at rows[i].
Matrix scatter_rows(const Matrix& src, std::span<const std::size_t> rows, std::size_t n_rows);
Matrix scale_rows(const Matrix& x, std::span<const double> factors);

// ---- reductions ----------------------------------------------------------

/// Sum whose result depends only on the multiset of terms, not their order.
/// Sorts the buffer in place.
double order_invariant_sum(std::span<double> terms);

/// Positions grouped by segment key, in ascending key order.
struct SegmentIndex {
  std::vector<std::vector<std::size_t>> members;

  static SegmentIndex build(std::span<const std::size_t> segment_ids);
  std::size_t positions() const;
};

/// Softmax within each segment. Stabilized by the segment max.
std::vector<double> segment_softmax(std::span<const double> scores,
                                    std::span<const std::size_t> segment_ids);
std::vector<double> segment_softmax(std::span<const double> scores, const SegmentIndex& index);

/// Gradient of segment_softmax given its output and the upstream gradient.
std::vector<double> segment_softmax_backward(std::span<const double> output,
                                             std::span<const double> grad_out,
                                             std::span<const std::size_t> segment_ids);
std::vector<double> segment_softmax_backward(std::span<const double> output,
                                             std::span<const double> grad_out,
                                             const SegmentIndex& index);

}  // namespace hgunet::nn
