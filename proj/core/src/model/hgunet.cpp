#include "hgunet/model/hgunet.hpp"

#include <fstream>

#include "hgunet/error.hpp"
#include "hgunet/numeric/checkpoint.hpp"
#include "hgunet/numeric/ops.hpp"

namespace hgunet::model {

using nn::Matrix;

// ---- embedding --------------------------------------------------------------

NodeEmbedding::NodeEmbedding(const ModelConfig& cfg, nn::RngStream& rng) : slope_(cfg.leaky_slope) {
  linear_[0] = nn::Linear("embed.host", cfg.host_dim, cfg.hidden_dim, rng);
  linear_[1] = nn::Linear("embed.flow", cfg.flow_dim, cfg.hidden_dim, rng);
}

TypedFeatures NodeEmbedding::forward(const Matrix& host, const Matrix& flow, Cache* cache) const {
  const std::array<const Matrix*, 2> in = {&host, &flow};
  TypedFeatures out;
  for (std::size_t t = 0; t < 2; ++t) {
    if (in[t]->cols() != linear_[t].in_features()) {
      throw DimensionError("embed: " + std::string(graph::to_string(graph::kNodeTypes[t])) + " features have width " +
                           std::to_string(in[t]->cols()) + ", expected " + std::to_string(linear_[t].in_features()));
    }
    Matrix pre = linear_[t].forward(*in[t], cache ? &cache->linear[t] : nullptr);
    out[t] = nn::leaky_relu(pre, slope_);
    if (cache) cache->pre[t] = std::move(pre);
  }
  return out;
}

TypedFeatures NodeEmbedding::backward(const Cache& cache, const TypedFeatures& grad_out) {
  TypedFeatures g;
  for (std::size_t t = 0; t < 2; ++t) {
    g[t] = linear_[t].backward(cache.linear[t], nn::leaky_relu_backward(cache.pre[t], grad_out[t], slope_));
  }
  return g;
}

void NodeEmbedding::collect(nn::ParameterRefs& out) {
  for (auto& l : linear_) l.collect(out);
}

// ---- classification head ----------------------------------------------------

FlowHead::FlowHead(const ModelConfig& cfg, nn::RngStream& rng) : slope_(cfg.leaky_slope), dropout_(cfg.dropout_rate) {
  linear_[0] = nn::Linear("head.fc1", cfg.hidden_dim, cfg.head_dims[0], rng);
  linear_[1] = nn::Linear("head.fc2", cfg.head_dims[0], cfg.head_dims[1], rng);
  linear_[2] = nn::Linear("head.fc3", cfg.head_dims[1], cfg.head_dims[2], rng);
  norm_[0] = nn::LayerNorm("head.norm1", cfg.head_dims[0]);
  norm_[1] = nn::LayerNorm("head.norm2", cfg.head_dims[1]);
}

std::vector<double> FlowHead::forward(const Matrix& x, bool training, nn::RngStream* rng, Cache* cache) const {
  Matrix h = x;
  for (std::size_t l = 0; l < 2; ++l) {
    Matrix pre = linear_[l].forward(h, cache ? &cache->linear[l] : nullptr);
    h = nn::leaky_relu(pre, slope_);
    h = norm_[l].forward(h, cache ? &cache->norm[l] : nullptr);
    h = nn::dropout(h, dropout_, training, rng, cache ? &cache->drop[l] : nullptr);
    if (cache) cache->pre[l] = std::move(pre);
  }
  const Matrix logits = linear_[2].forward(h, cache ? &cache->linear[2] : nullptr);
  return {logits.values().begin(), logits.values().end()};
}

Matrix FlowHead::backward(const Cache& cache, std::span<const double> grad_logits) {
  Matrix g = linear_[2].backward(cache.linear[2],
                                 Matrix(grad_logits.size(), 1, std::vector<double>(grad_logits.begin(), grad_logits.end())));
  for (std::size_t l = 2; l-- > 0;) {
    g = nn::dropout_backward(cache.drop[l], g);
    g = norm_[l].backward(cache.norm[l], g);
    g = nn::leaky_relu_backward(cache.pre[l], g, slope_);
    g = linear_[l].backward(cache.linear[l], g);
  }
  return g;
}

void FlowHead::collect(nn::ParameterRefs& out) {
  linear_[0].collect(out);
  norm_[0].collect(out);
  linear_[1].collect(out);
  norm_[1].collect(out);
  linear_[2].collect(out);
}

// ---- unpooling ----------------------------------------------------------------

Matrix unpool_rows(const Matrix& coarse, std::span<const std::size_t> kept, std::size_t pre_count) {
  if (coarse.rows() != kept.size()) {
    throw ConsistencyError("unpool: " + std::to_string(coarse.rows()) + " coarse rows for " +
                           std::to_string(kept.size()) + " stored indices");
  }
  for (std::size_t k : kept) {
    if (k >= pre_count) {
      throw ConsistencyError("unpool: stored index " + std::to_string(k) + " outside " + std::to_string(pre_count));
    }
  }
  return nn::scatter_rows(coarse, kept, pre_count);
}

// ---- full model ---------------------------------------------------------------

struct ForwardTrace {
  std::vector<Topology> topo;  // level 0 .. depth
  std::vector<EdgeSegments> seg;
  NodeEmbedding::Cache embed;
  std::vector<HeteroAttentionConv::Cache> enc_conv;
  std::vector<HeteroAttentionPool::Cache> pool;
  std::vector<HeteroAttentionConv::Cache> bottleneck;
  std::vector<std::array<nn::Linear::Cache, 2>> merge;
  std::vector<HeteroAttentionConv::Cache> dec_conv;
  FlowHead::Cache head;
  std::size_t flow_count = 0;
};

HGUNet::HGUNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  nn::RngStream rng(cfg_.seed);
  embed_ = NodeEmbedding(cfg_, rng);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    enc_conv_.emplace_back(p + ".conv", cfg_, rng);
    pool_.emplace_back(p + ".pool", cfg_, rng);
  }
  for (std::size_t b = 0; b < cfg_.bottleneck_layers; ++b) {
    bottleneck_.emplace_back("bottleneck" + std::to_string(b) + ".conv", cfg_, rng);
  }
  merge_.resize(cfg_.depth);
  dec_conv_.resize(cfg_.depth);
  for (std::size_t l = cfg_.depth; l-- > 0;) {
    const std::string p = "dec" + std::to_string(l);
    merge_[l][0] = nn::Linear(p + ".merge.host", cfg_.hidden_dim, cfg_.hidden_dim, rng);
    merge_[l][1] = nn::Linear(p + ".merge.flow", cfg_.hidden_dim, cfg_.hidden_dim, rng);
    dec_conv_[l] = HeteroAttentionConv(p + ".conv", cfg_, rng);
  }
  head_ = FlowHead(cfg_, rng);
}

nn::ParameterRefs HGUNet::parameters() {
  nn::ParameterRefs out;
  embed_.collect(out);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    enc_conv_[l].collect(out);
    pool_[l].collect(out);
  }
  for (auto& b : bottleneck_) b.collect(out);
  for (std::size_t l = cfg_.depth; l-- > 0;) {
    merge_[l][0].collect(out);
    merge_[l][1].collect(out);
    dec_conv_[l].collect(out);
  }
  head_.collect(out);
  return out;
}

std::size_t HGUNet::parameter_count() {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void HGUNet::zero_grad() { nn::zero_grads(parameters()); }

nn::Parameter* HGUNet::find_parameter(std::string_view name) {
  for (auto* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

ForwardResult HGUNet::forward(const graph::HeteroGraph& g, const ForwardOptions& opts) const {
  if (opts.replay && opts.replay->size() != cfg_.depth) {
    throw ConsistencyError("forward: replayed pool record has " + std::to_string(opts.replay->size()) +
                           " levels, model depth is " + std::to_string(cfg_.depth));
  }
  const bool keep = opts.keep_trace;
  auto trace = std::make_shared<ForwardTrace>();
  ForwardTrace* tr = keep ? trace.get() : nullptr;
  if (tr) {
    tr->enc_conv.resize(cfg_.depth);
    tr->pool.resize(cfg_.depth);
    tr->bottleneck.resize(bottleneck_.size());
    tr->merge.resize(cfg_.depth);
    tr->dec_conv.resize(cfg_.depth);
  }

  std::vector<Topology> topo{g.topology};
  std::vector<EdgeSegments> seg{EdgeSegments::build(g.topology)};
  TypedFeatures h = embed_.forward(g.host_features, g.flow_features, tr ? &tr->embed : nullptr);
  if (h[0].rows() != g.topology.count(NodeType::Host) || h[1].rows() != g.topology.count(NodeType::Flow)) {
    throw DimensionError("forward: feature rows do not match the topology");
  }

  ForwardResult result;
  std::vector<TypedFeatures> skips;
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    h = enc_conv_[l].forward(topo[l], seg[l], h, opts.training, opts.rng, tr ? &tr->enc_conv[l] : nullptr);
    skips.push_back(h);
    const PoolLevel* replay = opts.replay ? &(*opts.replay)[l] : nullptr;
    auto pooled = pool_[l].forward(topo[l], h, cfg_.pool_ratios[l], opts.training, opts.rng, replay,
                                   tr ? &tr->pool[l] : nullptr);
    h = std::move(pooled.features);
    result.pool_record.push_back(std::move(pooled.level));
    seg.push_back(EdgeSegments::build(pooled.topology));
    topo.push_back(std::move(pooled.topology));
  }
  for (std::size_t b = 0; b < bottleneck_.size(); ++b) {
    h = bottleneck_[b].forward(topo[cfg_.depth], seg[cfg_.depth], h, opts.training, opts.rng,
                               tr ? &tr->bottleneck[b] : nullptr);
  }
  for (std::size_t l = cfg_.depth; l-- > 0;) {
    const auto& level = result.pool_record[l];
    TypedFeatures merged;
    for (std::size_t t = 0; t < 2; ++t) {
      Matrix up = unpool_rows(h[t], level.kept[t], level.pre_counts[t]);
      nn::add_inplace(up, skips[l][t]);
      merged[t] = merge_[l][t].forward(up, tr ? &tr->merge[l][t] : nullptr);
    }
    h = dec_conv_[l].forward(topo[l], seg[l], merged, opts.training, opts.rng, tr ? &tr->dec_conv[l] : nullptr);
  }

  result.flow_rows = g.in_window_flows();
  const Matrix scored = nn::gather_rows(h[1], result.flow_rows);
  result.logits = head_.forward(scored, opts.training, opts.rng, tr ? &tr->head : nullptr);
  result.probabilities.reserve(result.logits.size());
  for (double z : result.logits) result.probabilities.push_back(nn::sigmoid(z));
  if (tr) {
    tr->topo = std::move(topo);
    tr->seg = std::move(seg);
    tr->flow_count = g.flow_count();
    result.trace = std::move(trace);
  }
  return result;
}

InputGrads HGUNet::backward(const ForwardResult& result, std::span<const double> grad_logits) {
  if (!result.trace) throw ConsistencyError("backward: forward was run without keep_trace");
  if (grad_logits.size() != result.logits.size()) {
    throw DimensionError("backward: " + std::to_string(grad_logits.size()) + " logit grads for " +
                         std::to_string(result.logits.size()) + " flows");
  }
  const ForwardTrace& tr = *result.trace;
  const std::size_t depth = cfg_.depth;

  TypedFeatures g;
  g[1] = nn::scatter_rows(head_.backward(tr.head, grad_logits), result.flow_rows, tr.flow_count);
  g[0] = Matrix(tr.topo[0].count(NodeType::Host), cfg_.hidden_dim);

  std::vector<TypedFeatures> g_skip(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    g = dec_conv_[l].backward(tr.topo[l], tr.seg[l], tr.dec_conv[l], g);
    TypedFeatures coarse;
    for (std::size_t t = 0; t < 2; ++t) {
      g_skip[l][t] = merge_[l][t].backward(tr.merge[l][t], g[t]);
      coarse[t] = nn::gather_rows(g_skip[l][t], result.pool_record[l].kept[t]);
    }
    g = std::move(coarse);
  }
  for (std::size_t b = bottleneck_.size(); b-- > 0;) {
    g = bottleneck_[b].backward(tr.topo[depth], tr.seg[depth], tr.bottleneck[b], g);
  }
  for (std::size_t l = depth; l-- > 0;) {
    g = pool_[l].backward(tr.pool[l], g);
    for (std::size_t t = 0; t < 2; ++t) nn::add_inplace(g[t], g_skip[l][t]);
    g = enc_conv_[l].backward(tr.topo[l], tr.seg[l], tr.enc_conv[l], g);
  }
  auto in = embed_.backward(tr.embed, g);
  return {std::move(in[0]), std::move(in[1])};
}

// ---- checkpoint -------------------------------------------------------------

nlohmann::json model_to_json(HGUNet& model) {
  return {{"format", "hgunet-model"}, {"config", model.config()}, {"weights", nn::parameters_to_json(model.parameters())}};
}

HGUNet model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "hgunet-model") {
    throw SchemaError("model checkpoint: missing or unknown format tag");
  }
  if (!j.contains("config") || !j.contains("weights")) throw SchemaError("model checkpoint: needs config and weights");
  ModelConfig cfg;
  try {
    cfg = j.at("config").get<ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model checkpoint: bad config header: ") + e.what());
  }
  cfg.validate();
  HGUNet model(cfg);
  nn::parameters_from_json(j.at("weights"), model.parameters());
  return model;
}

void save_model(HGUNet& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model checkpoint " + path);
  out << model_to_json(model).dump() << '\n';
  if (!out) throw IoError("write failed for " + path);
}

HGUNet load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read model checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("model checkpoint " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hgunet::model
