#include "hgunet/model/conv.hpp"

#include "hgunet/error.hpp"
#include "hgunet/numeric/ops.hpp"

namespace hgunet::model {

using nn::Matrix;

HeteroAttentionConv::HeteroAttentionConv(const std::string& name, const ModelConfig& cfg,
                                         nn::RngStream& rng)
    : hidden_(cfg.hidden_dim), heads_(cfg.heads), slope_(cfg.leaky_slope), dropout_(cfg.dropout_rate) {
  const std::size_t head_dim = hidden_ / heads_;
  for (EdgeType e : graph::kEdgeTypes) {
    const std::string p = name + "." + std::string(graph::to_string(e));
    auto& ep = edge_[graph::index(e)];
    ep.w_src = nn::Parameter(p + ".w_src", Matrix(hidden_, hidden_));
    ep.att_src = nn::Parameter(p + ".att_src", Matrix(heads_, head_dim));
    ep.att_dst = nn::Parameter(p + ".att_dst", Matrix(hidden_, heads_));
    nn::glorot_init(ep.w_src, rng);
    nn::glorot_init(ep.att_src, rng);
    nn::glorot_init(ep.att_dst, rng);
    ep.merge = nn::Linear(p + ".merge", hidden_, hidden_, rng);
  }
  for (NodeType t : graph::kNodeTypes) {
    norm_[graph::index(t)] = nn::LayerNorm(name + ".norm." + std::string(graph::to_string(t)), hidden_);
  }
}

void HeteroAttentionConv::collect(nn::ParameterRefs& out) {
  for (auto& ep : edge_) {
    out.push_back(&ep.w_src);
    out.push_back(&ep.att_src);
    out.push_back(&ep.att_dst);
    ep.merge.collect(out);
  }
  for (auto& n : norm_) n.collect(out);
}

TypedFeatures HeteroAttentionConv::forward(const Topology& topo, const EdgeSegments& seg,
                                           const TypedFeatures& x, bool training, nn::RngStream* rng,
                                           Cache* cache) const {
  for (NodeType t : graph::kNodeTypes) {
    const auto& m = x[graph::index(t)];
    if (m.rows() != topo.count(t) || m.cols() != hidden_) {
      throw DimensionError("conv: " + std::string(graph::to_string(t)) + " features " + m.shape_str() +
                           " for " + std::to_string(topo.count(t)) + " nodes of width " +
                           std::to_string(hidden_));
    }
  }
  const std::size_t head_dim = hidden_ / heads_;
  TypedFeatures total = {Matrix(x[0].rows(), hidden_), Matrix(x[1].rows(), hidden_)};
  if (cache) cache->input = x;

  std::vector<double> col, buf;
  for (EdgeType e : graph::kEdgeTypes) {
    const auto ei = graph::index(e);
    const auto si = graph::index(graph::source_type(e));
    const auto ti = graph::index(graph::target_type(e));
    const auto& edges = topo.of(e);
    const auto& ep = edge_[ei];
    const std::size_t m = edges.size();
    EdgeTypeCache* ec = cache ? &cache->edges[ei] : nullptr;
    if (m == 0) {
      if (ec) *ec = EdgeTypeCache{};
      continue;
    }

    Matrix z = nn::matmul(x[si], ep.w_src.value);
    Matrix src_score(z.rows(), heads_);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t k = 0; k < heads_; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) s += ep.att_src.value(k, c) * z(i, k * head_dim + c);
        src_score(i, k) = s;
      }
    }
    const Matrix dst_score = nn::matmul(x[ti], ep.att_dst.value);

    Matrix raw(m, heads_);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < heads_; ++k) raw(j, k) = src_score(edges[j].src, k) + dst_score(edges[j].dst, k);
    }
    const Matrix act = nn::leaky_relu(raw, slope_);
    Matrix alpha(m, heads_);
    col.resize(m);
    for (std::size_t k = 0; k < heads_; ++k) {
      for (std::size_t j = 0; j < m; ++j) col[j] = act(j, k);
      const auto a = nn::segment_softmax(col, seg.by_dst[ei]);
      for (std::size_t j = 0; j < m; ++j) alpha(j, k) = a[j];
    }

    Matrix agg(x[ti].rows(), hidden_);
    std::vector<std::uint8_t> has_in(x[ti].rows(), 0);
    const auto& segments = seg.by_dst[ei].members;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const std::size_t d = seg.dst_of_segment[ei][s];
      has_in[d] = 1;
      for (std::size_t c = 0; c < hidden_; ++c) {
        const std::size_t k = c / head_dim;
        buf.clear();
        for (std::size_t j : segments[s]) buf.push_back(alpha(j, k) * z(edges[j].src, c));
        agg(d, c) = nn::order_invariant_sum(buf);
      }
    }

    nn::Linear::Cache merge_cache;
    Matrix merged = ep.merge.forward(agg, ec ? &merge_cache : nullptr);
    for (std::size_t r = 0; r < merged.rows(); ++r) {
      if (!has_in[r]) {
        for (std::size_t c = 0; c < hidden_; ++c) merged(r, c) = 0.0;
      }
    }
    nn::add_inplace(total[ti], merged);
    if (ec) {
      ec->z = std::move(z);
      ec->raw = std::move(raw);
      ec->alpha = std::move(alpha);
      ec->merge = std::move(merge_cache);
      ec->has_in = std::move(has_in);
    }
  }

  TypedFeatures out;
  for (NodeType t : graph::kNodeTypes) {
    const auto ti = graph::index(t);
    Matrix h = nn::add(x[ti], total[ti]);
    h = norm_[ti].forward(h, cache ? &cache->norm[ti] : nullptr);
    out[ti] = nn::dropout(h, dropout_, training, rng, cache ? &cache->drop[ti] : nullptr);
  }
  return out;
}

TypedFeatures HeteroAttentionConv::backward(const Topology& topo, const EdgeSegments& seg, const Cache& cache,
                                            const TypedFeatures& grad_out) {
  const std::size_t head_dim = hidden_ / heads_;
  TypedFeatures g_h;
  TypedFeatures g_x;
  for (NodeType t : graph::kNodeTypes) {
    const auto ti = graph::index(t);
    const Matrix g = nn::dropout_backward(cache.drop[ti], grad_out[ti]);
    g_h[ti] = norm_[ti].backward(cache.norm[ti], g);
    g_x[ti] = g_h[ti];  // residual path
  }

  for (EdgeType e : graph::kEdgeTypes) {
    const auto ei = graph::index(e);
    const auto si = graph::index(graph::source_type(e));
    const auto ti = graph::index(graph::target_type(e));
    const auto& edges = topo.of(e);
    const std::size_t m = edges.size();
    if (m == 0) continue;
    auto& ep = edge_[ei];
    const auto& ec = cache.edges[ei];
    const Matrix& xs = cache.input[si];
    const Matrix& xt = cache.input[ti];

    Matrix g_merged = g_h[ti];
    for (std::size_t r = 0; r < g_merged.rows(); ++r) {
      if (!ec.has_in[r]) {
        for (std::size_t c = 0; c < hidden_; ++c) g_merged(r, c) = 0.0;
      }
    }
    const Matrix g_agg = ep.merge.backward(ec.merge, g_merged);

    Matrix g_z(ec.z.rows(), hidden_);
    Matrix g_alpha(m, heads_);
    for (std::size_t j = 0; j < m; ++j) {
      const auto [src, dst] = edges[j];
      for (std::size_t c = 0; c < hidden_; ++c) {
        const std::size_t k = c / head_dim;
        g_z(src, c) += ec.alpha(j, k) * g_agg(dst, c);
        g_alpha(j, k) += g_agg(dst, c) * ec.z(src, c);
      }
    }

    Matrix g_act(m, heads_);
    std::vector<double> a(m), ga(m);
    for (std::size_t k = 0; k < heads_; ++k) {
      for (std::size_t j = 0; j < m; ++j) {
        a[j] = ec.alpha(j, k);
        ga[j] = g_alpha(j, k);
      }
      const auto gs = nn::segment_softmax_backward(a, ga, seg.by_dst[ei]);
      for (std::size_t j = 0; j < m; ++j) g_act(j, k) = gs[j];
    }
    const Matrix g_raw = nn::leaky_relu_backward(ec.raw, g_act, slope_);

    Matrix g_src_score(xs.rows(), heads_);
    Matrix g_dst_score(xt.rows(), heads_);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < heads_; ++k) {
        g_src_score(edges[j].src, k) += g_raw(j, k);
        g_dst_score(edges[j].dst, k) += g_raw(j, k);
      }
    }
    for (std::size_t i = 0; i < xs.rows(); ++i) {
      for (std::size_t k = 0; k < heads_; ++k) {
        const double g = g_src_score(i, k);
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < head_dim; ++c) {
          ep.att_src.grad(k, c) += g * ec.z(i, k * head_dim + c);
          g_z(i, k * head_dim + c) += g * ep.att_src.value(k, c);
        }
      }
    }
    nn::add_inplace(ep.att_dst.grad, nn::matmul_tn(xt, g_dst_score));
    nn::add_inplace(g_x[ti], nn::matmul_nt(g_dst_score, ep.att_dst.value));
    nn::add_inplace(ep.w_src.grad, nn::matmul_tn(xs, g_z));
    nn::add_inplace(g_x[si], nn::matmul_nt(g_z, ep.w_src.value));
  }
  return g_x;
}

}  // namespace hgunet::model
