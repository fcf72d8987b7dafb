#include "hgunet/model/pool.hpp"

#include <algorithm>
#include <numeric>

#include "hgunet/error.hpp"
#include "hgunet/numeric/ops.hpp"

namespace hgunet::model {

using nn::Matrix;

void PoolLevel::validate() const {
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& k = kept[t];
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (k[i] >= pre_counts[t] || (i > 0 && k[i] <= k[i - 1])) {
        throw ConsistencyError("pool record: kept indices for " +
                               std::string(graph::to_string(graph::kNodeTypes[t])) +
                               " not strictly increasing within " + std::to_string(pre_counts[t]));
      }
    }
  }
}

nlohmann::json pool_record_to_json(const PoolRecord& r) {
  auto out = nlohmann::json::array();
  for (const auto& level : r) {
    out.push_back({{"host", {{"pre_count", level.pre_counts[0]}, {"kept", level.kept[0]}}},
                   {"flow", {{"pre_count", level.pre_counts[1]}, {"kept", level.kept[1]}}}});
  }
  return out;
}

std::vector<std::size_t> top_k_indices(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

HeteroAttentionPool::HeteroAttentionPool(const std::string& name, const ModelConfig& cfg, nn::RngStream& rng)
    : heads_(cfg.heads), noise_std_(cfg.pool_noise_std) {
  for (NodeType t : graph::kNodeTypes) {
    const auto ti = graph::index(t);
    const std::string p = name + "." + std::string(graph::to_string(t));
    weight_[ti] = nn::Parameter(p + ".score_weight", Matrix(cfg.hidden_dim, heads_));
    bias_[ti] = nn::Parameter(p + ".score_bias", Matrix(1, heads_));
    nn::glorot_init(weight_[ti], rng);
  }
}

void HeteroAttentionPool::collect(nn::ParameterRefs& out) {
  for (std::size_t t = 0; t < 2; ++t) {
    out.push_back(&weight_[t]);
    out.push_back(&bias_[t]);
  }
}

HeteroAttentionPool::Output HeteroAttentionPool::forward(const Topology& topo, const TypedFeatures& x,
                                                         double ratio, bool training, nn::RngStream* rng,
                                                         const PoolLevel* replay, Cache* cache) const {
  Output out;
  for (NodeType t : graph::kNodeTypes) {
    const auto ti = graph::index(t);
    const Matrix& xt = x[ti];
    const std::size_t n = xt.rows();
    if (n != topo.count(t)) throw DimensionError("pool: feature rows do not match node count");
    out.level.pre_counts[ti] = n;

    const Matrix head_scores = nn::tanh(nn::add_row(nn::matmul(xt, weight_[ti].value), bias_[ti].value));
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < heads_; ++k) s += head_scores(i, k);
      score[i] = s / static_cast<double>(heads_);
    }

    std::vector<std::size_t> kept;
    if (replay) {
      if (replay->pre_counts[ti] != n) throw ConsistencyError("pool: replayed record does not match graph");
      kept = replay->kept[ti];
    } else {
      std::vector<double> selection = score;
      if (training && noise_std_ > 0.0 && rng) {
        for (double& s : selection) s += rng->normal(0.0, noise_std_);
      }
      kept = top_k_indices(selection, pooled_count(ratio, n));
    }

    std::vector<double> gate(kept.size());
    for (std::size_t r = 0; r < kept.size(); ++r) {
      if (kept[r] >= n) throw ConsistencyError("pool: kept index out of range");
      gate[r] = nn::sigmoid(score[kept[r]]);
    }
    out.features[ti] = nn::scale_rows(nn::gather_rows(xt, kept), gate);
    out.level.kept[ti] = std::move(kept);
    if (cache) {
      auto& tc = cache->types[ti];
      tc.input = xt;
      tc.head_scores = head_scores;
      tc.score = std::move(score);
      tc.gate = std::move(gate);
    }
  }
  out.level.validate();
  out.topology = induce_subgraph(topo, out.level.kept);
  if (cache) cache->level = out.level;
  return out;
}

TypedFeatures HeteroAttentionPool::backward(const Cache& cache, const TypedFeatures& grad_out) {
  TypedFeatures g_x;
  for (std::size_t ti = 0; ti < 2; ++ti) {
    const auto& tc = cache.types[ti];
    const auto& kept = cache.level.kept[ti];
    const Matrix& gy = grad_out[ti];
    const std::size_t n = tc.input.rows();
    g_x[ti] = nn::scatter_rows(nn::scale_rows(gy, tc.gate), kept, n);
    if (n == 0) continue;

    std::vector<double> g_score(n, 0.0);
    for (std::size_t r = 0; r < kept.size(); ++r) {
      double g_gate = 0.0;
      for (std::size_t c = 0; c < gy.cols(); ++c) g_gate += gy(r, c) * tc.input(kept[r], c);
      g_score[kept[r]] = g_gate * tc.gate[r] * (1.0 - tc.gate[r]);
    }
    Matrix g_head(n, heads_);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < heads_; ++k) g_head(i, k) = g_score[i] / static_cast<double>(heads_);
    }
    const Matrix g_pre = nn::tanh_backward(tc.head_scores, g_head);
    nn::add_inplace(weight_[ti].grad, nn::matmul_tn(tc.input, g_pre));
    nn::add_inplace(bias_[ti].grad, nn::column_sums(g_pre));
    nn::add_inplace(g_x[ti], nn::matmul_nt(g_pre, weight_[ti].value));
  }
  return g_x;
}

}  // namespace hgunet::model
