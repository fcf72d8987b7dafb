#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/model/config.hpp"
#include "hgunet/model/topology.hpp"
#include "hgunet/numeric/layers.hpp"

namespace hgunet::model {

/// Kept node indices (ascending, into the pre-pool ordering) and pre-pool
/// counts for one encoder level, per node type.
struct PoolLevel {
  TypedIndices kept;
  std::array<std::size_t, 2> pre_counts = {0, 0};

  bool operator==(const PoolLevel&) const = default;
  /// Throws ConsistencyError unless indices are strictly increasing and in range.
  void validate() const;
};

using PoolRecord = std::vector<PoolLevel>;

nlohmann::json pool_record_to_json(const PoolRecord& r);

/// Attention-based top-k pooling, applied to hosts and flows independently.
/// A per-type multi-head scorer gives s = mean_k tanh(x·p_k + b_k); selection
/// uses s (+ Gaussian noise while training), kept rows are gated by sigmoid(s).
class HeteroAttentionPool {
 public:
  struct TypeCache {
    nn::Matrix input;
    nn::Matrix head_scores;  // n × heads, tanh outputs
    std::vector<double> score;
    std::vector<double> gate;  // per kept row
  };
  struct Cache {
    std::array<TypeCache, 2> types;
    PoolLevel level;
  };
  struct Output {
    TypedFeatures features;
    Topology topology;
    PoolLevel level;
  };

  HeteroAttentionPool() = default;
  HeteroAttentionPool(const std::string& name, const ModelConfig& cfg, nn::RngStream& rng);

  /// `replay` forces a previous selection (used to hold the piecewise
  /// selection fixed for finite-difference checks).
  Output forward(const Topology& topo, const TypedFeatures& x, double ratio, bool training,
                 nn::RngStream* rng, const PoolLevel* replay, Cache* cache) const;
  TypedFeatures backward(const Cache& cache, const TypedFeatures& grad_out);

  void collect(nn::ParameterRefs& out);

 private:
  std::size_t heads_ = 0;
  double noise_std_ = 0.0;
  std::array<nn::Parameter, 2> weight_;  // hidden × heads
  std::array<nn::Parameter, 2> bias_;    // 1 × heads
};

/// Indices of the k best scores (ties → lower index), returned ascending.
std::vector<std::size_t> top_k_indices(const std::vector<double>& scores, std::size_t k);

}  // namespace hgunet::model
