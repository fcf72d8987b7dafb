#pragma once

#include <array>
#include <string>

#include "hgunet/model/config.hpp"
#include "hgunet/model/topology.hpp"
#include "hgunet/numeric/layers.hpp"

namespace hgunet::model {

/// Residual heterogeneous graph attention convolution.
///
/// For each of the four edge types, source states are projected and split
/// into heads; every edge gets a score leaky(a_src·z_src + a_dst·x_dst) per
/// head, normalized with a softmax over the destination's in-edges of that
/// type. Heads of the weighted sum are concatenated and linearly merged.
/// A node sums the merged messages of its incoming edge types (nodes with no
/// in-edges of a type get nothing from it), adds its input (residual), and
/// passes through per-type layer norm and dropout.
///
/// Neighbourhood sums are order-invariant, so evaluation-mode output is
/// exactly equivariant under node renumbering.
class HeteroAttentionConv {
 public:
  struct EdgeTypeCache {
    nn::Matrix z;                 // n_src × hidden, projected sources
    nn::Matrix raw;               // m × heads, pre-activation scores
    nn::Matrix alpha;             // m × heads, normalized attention
    nn::Linear::Cache merge;      // input = n_dst × hidden concatenated heads
    std::vector<std::uint8_t> has_in;
  };
  struct Cache {
    TypedFeatures input;
    std::array<EdgeTypeCache, 4> edges;
    std::array<nn::LayerNorm::Cache, 2> norm;
    std::array<nn::DropoutCache, 2> drop;
  };

  HeteroAttentionConv() = default;
  HeteroAttentionConv(const std::string& name, const ModelConfig& cfg, nn::RngStream& rng);

  TypedFeatures forward(const Topology& topo, const EdgeSegments& seg, const TypedFeatures& x,
                        bool training, nn::RngStream* rng, Cache* cache) const;
  TypedFeatures backward(const Topology& topo, const EdgeSegments& seg, const Cache& cache,
                         const TypedFeatures& grad_out);

  void collect(nn::ParameterRefs& out);

 private:
  struct EdgeParams {
    nn::Parameter w_src;    // hidden × hidden
    nn::Parameter att_src;  // heads × head_dim
    nn::Parameter att_dst;  // hidden × heads
    nn::Linear merge;       // hidden → hidden
  };

  std::size_t hidden_ = 0;
  std::size_t heads_ = 0;
  double slope_ = 0.2;
  double dropout_ = 0.0;
  std::array<EdgeParams, 4> edge_;
  std::array<nn::LayerNorm, 2> norm_;
};

}  // namespace hgunet::model
