#pragma once

#include <array>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/graph/hetero_graph.hpp"
#include "hgunet/model/config.hpp"
#include "hgunet/model/conv.hpp"
#include "hgunet/model/pool.hpp"
#include "hgunet/model/topology.hpp"
#include "hgunet/numeric/layers.hpp"

namespace hgunet::model {

/// Per-type linear + leaky-ReLU into the hidden width.
class NodeEmbedding {
 public:
  struct Cache {
    std::array<nn::Linear::Cache, 2> linear;
    std::array<nn::Matrix, 2> pre;
  };

  NodeEmbedding() = default;
  NodeEmbedding(const ModelConfig& cfg, nn::RngStream& rng);

  TypedFeatures forward(const nn::Matrix& host, const nn::Matrix& flow, Cache* cache) const;
  TypedFeatures backward(const Cache& cache, const TypedFeatures& grad_out);
  void collect(nn::ParameterRefs& out);

 private:
  double slope_ = 0.2;
  std::array<nn::Linear, 2> linear_;
};

/// fc → leaky → layer norm → dropout, twice, then fc to one logit.
class FlowHead {
 public:
  struct Cache {
    std::array<nn::Linear::Cache, 3> linear;
    std::array<nn::Matrix, 2> pre;
    std::array<nn::LayerNorm::Cache, 2> norm;
    std::array<nn::DropoutCache, 2> drop;
  };

  FlowHead() = default;
  FlowHead(const ModelConfig& cfg, nn::RngStream& rng);

  /// One logit per row of `x`.
  std::vector<double> forward(const nn::Matrix& x, bool training, nn::RngStream* rng, Cache* cache) const;
  nn::Matrix backward(const Cache& cache, std::span<const double> grad_logits);
  void collect(nn::ParameterRefs& out);

 private:
  double slope_ = 0.2;
  double dropout_ = 0.0;
  std::array<nn::Linear, 3> linear_;
  std::array<nn::LayerNorm, 2> norm_;
};

/// Zero matrix of `pre_count` rows with coarse row r placed at kept[r].
/// Throws ConsistencyError on an out-of-range index.
nn::Matrix unpool_rows(const nn::Matrix& coarse, std::span<const std::size_t> kept, std::size_t pre_count);

struct ForwardOptions {
  bool training = false;
  nn::RngStream* rng = nullptr;
  /// Reuse a previous pooling selection instead of scoring top-k afresh.
  const PoolRecord* replay = nullptr;
  /// Keep the intermediate state needed by backward().
  bool keep_trace = false;
};

struct ForwardTrace;

struct ForwardResult {
  std::vector<std::size_t> flow_rows;  // in-window flow rows of the graph, ascending
  std::vector<double> logits;
  std::vector<double> probabilities;
  PoolRecord pool_record;
  std::shared_ptr<const ForwardTrace> trace;
};

struct InputGrads {
  nn::Matrix host;
  nn::Matrix flow;
};

class HGUNet {
 public:
  explicit HGUNet(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  /// Const and re-entrant on frozen parameters.
  ForwardResult forward(const graph::HeteroGraph& g, const ForwardOptions& opts = {}) const;
  /// Accumulates parameter grads for d(loss)/d(logits); needs a kept trace.
  InputGrads backward(const ForwardResult& result, std::span<const double> grad_logits);

  nn::ParameterRefs parameters();
  std::size_t parameter_count();
  void zero_grad();
  nn::Parameter* find_parameter(std::string_view name);

  NodeEmbedding& embedding() { return embed_; }
  FlowHead& head() { return head_; }

 private:
  ModelConfig cfg_;
  NodeEmbedding embed_;
  std::vector<HeteroAttentionConv> enc_conv_;
  std::vector<HeteroAttentionPool> pool_;
  std::vector<HeteroAttentionConv> bottleneck_;
  std::vector<std::array<nn::Linear, 2>> merge_;
  std::vector<HeteroAttentionConv> dec_conv_;
  FlowHead head_;
};

/// Config header plus parameters; see model_from_json.
nlohmann::json model_to_json(HGUNet& model);
/// Validates the config first, then loads weights (names and shapes must match).
HGUNet model_from_json(const nlohmann::json& j);
void save_model(HGUNet& model, const std::string& path);
HGUNet load_model(const std::string& path);

struct FeatureContribution {
  std::string name;
  std::size_t index = 0;
  double value = 0.0;
};

/// Gradient-of-logit × input over the flow's own features, sorted by
/// |contribution| descending, ties by feature index; top `top_m` (0 = all).
/// `result` must come from an evaluation-mode forward with a kept trace and
/// `position` indexes result.flow_rows. Backward runs on `scratch`, whose
/// parameter grads are clobbered; pass a copy when the model is shared.
std::vector<FeatureContribution> saliency(HGUNet& scratch, const graph::HeteroGraph& g,
                                          const ForwardResult& result, std::size_t position,
                                          std::span<const std::string> feature_names, std::size_t top_m = 0);

/// Convenience form: copies the model, runs the forward itself.
/// Throws LookupError for an unknown or historical flow id.
std::vector<FeatureContribution> saliency(const HGUNet& model, const graph::HeteroGraph& g,
                                          std::string_view flow_id, std::span<const std::string> feature_names,
                                          std::size_t top_m = 0);

}  // namespace hgunet::model
