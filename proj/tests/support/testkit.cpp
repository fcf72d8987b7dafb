#include "testkit.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "hgunet/model/conv.hpp"
#include "hgunet/model/topology.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/train/crossval.hpp"
#include "hgunet/train/synthetic.hpp"

namespace hgunet::testkit {

using graph::Edge;
using graph::EdgeType;
using graph::index;

graph::HeteroGraph random_graph(nn::RngStream& rng, const GraphShape& shape) {
  graph::HeteroGraph g;
  const std::size_t total_flows = shape.flows + shape.historical;
  for (std::size_t h = 0; h < shape.hosts; ++h) g.host_ids.push_back("10.0.0." + std::to_string(h));
  for (std::size_t f = 0; f < total_flows; ++f) {
    g.flow_ids.push_back("f" + std::to_string(f));
    g.historical.push_back(f < shape.flows ? 0 : 1);
    g.flow_labels.push_back(static_cast<int>(rng.below(2)));
  }
  auto& e = g.topology.edges;
  for (std::size_t f = 0; f < total_flows; ++f) {
    const std::size_t src = rng.below(shape.hosts);
    std::size_t dst = rng.below(shape.hosts);
    if (shape.hosts > 1) {
      while (dst == src) dst = rng.below(shape.hosts);
    }
    const bool historical = f >= shape.flows;
    const bool with_src = !historical || rng.bernoulli(0.5);
    const bool with_dst = !historical || !with_src;
    if (with_src) {
      e[index(EdgeType::SrcToFlow)].push_back({src, f});
      e[index(EdgeType::FlowToSrc)].push_back({f, src});
    }
    if (with_dst) {
      e[index(EdgeType::FlowToDst)].push_back({f, dst});
      e[index(EdgeType::DstToFlow)].push_back({dst, f});
    }
  }
  g.topology.nodes = {shape.hosts, total_flows};
  g.host_features = nn::Matrix(shape.hosts, shape.host_dim);
  g.flow_features = nn::Matrix(total_flows, shape.flow_dim);
  for (double& v : g.host_features.values()) v = rng.normal();
  for (double& v : g.flow_features.values()) v = rng.normal();
  return g;
}

GraphShape random_shape(nn::RngStream& rng, std::size_t max_nodes, std::size_t host_dim, std::size_t flow_dim) {
  GraphShape s;
  s.host_dim = host_dim;
  s.flow_dim = flow_dim;
  const std::size_t total = 4 + rng.below(max_nodes - 3);  // 4..max_nodes
  s.hosts = 2 + rng.below(total / 2 - 1);
  const std::size_t flows = total - s.hosts;
  s.historical = rng.below(std::max<std::size_t>(1, flows / 3));
  s.flows = flows - s.historical;
  return s;
}

std::vector<std::size_t> random_permutation(nn::RngStream& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(std::span<std::size_t>(p));
  return p;
}

graph::HeteroGraph permute_graph(const graph::HeteroGraph& g, const std::vector<std::size_t>& host_perm,
                                 const std::vector<std::size_t>& flow_perm, nn::RngStream& rng) {
  graph::HeteroGraph out;
  const std::size_t nh = g.host_count(), nf = g.flow_count();
  out.host_ids.resize(nh);
  out.flow_ids.resize(nf);
  out.flow_labels.resize(nf);
  out.historical.resize(nf);
  out.host_features = nn::Matrix(nh, g.host_features.cols());
  out.flow_features = nn::Matrix(nf, g.flow_features.cols());
  for (std::size_t h = 0; h < nh; ++h) {
    out.host_ids[host_perm[h]] = g.host_ids[h];
    std::copy(g.host_features.row(h).begin(), g.host_features.row(h).end(),
              out.host_features.row(host_perm[h]).begin());
  }
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t t = flow_perm[f];
    out.flow_ids[t] = g.flow_ids[f];
    out.flow_labels[t] = g.flow_labels[f];
    out.historical[t] = g.historical[f];
    std::copy(g.flow_features.row(f).begin(), g.flow_features.row(f).end(), out.flow_features.row(t).begin());
  }
  out.topology.nodes = g.topology.nodes;
  for (EdgeType et : graph::kEdgeTypes) {
    const auto& src_perm = graph::source_type(et) == graph::NodeType::Host ? host_perm : flow_perm;
    const auto& dst_perm = graph::target_type(et) == graph::NodeType::Host ? host_perm : flow_perm;
    auto& edges = out.topology.of(et);
    for (const Edge& e : g.topology.of(et)) edges.push_back({src_perm[e.src], dst_perm[e.dst]});
    rng.shuffle(std::span<Edge>(edges));
  }
  return out;
}

model::ModelConfig small_config(std::size_t host_dim, std::size_t flow_dim, std::uint64_t seed) {
  model::ModelConfig c;
  c.host_dim = host_dim;
  c.flow_dim = flow_dim;
  c.hidden_dim = 8;
  c.heads = 2;
  c.depth = 3;
  c.head_dims = {8, 4, 1};
  c.dropout_rate = 0.0;
  c.seed = seed;
  return c;
}

nn::GradCheckReport model_grad_check(model::HGUNet& net, const graph::HeteroGraph& g, nn::RngStream& rng,
                                     double tolerance, const nn::GradCheckOptions& opts) {
  const auto base = net.forward(g);
  const model::PoolRecord fixed = base.pool_record;
  std::vector<double> coeff(base.logits.size());
  for (double& c : coeff) c = rng.normal();
  model::ForwardOptions eval;
  eval.replay = &fixed;
  auto loss = [&] {
    const auto r = net.forward(g, eval);
    double s = 0.0;
    for (std::size_t i = 0; i < coeff.size(); ++i) s += coeff[i] * r.logits[i];
    return s;
  };
  auto loss_and_grad = [&] {
    model::ForwardOptions traced = eval;
    traced.keep_trace = true;
    const auto r = net.forward(g, traced);
    net.zero_grad();
    net.backward(r, coeff);
  };
  return nn::grad_check(loss, loss_and_grad, net.parameters(), tolerance, opts);
}

nn::GradCheckReport conv_grad_check(const model::ModelConfig& cfg, const graph::HeteroGraph& g, nn::RngStream& rng,
                                    double tolerance, const nn::GradCheckOptions& opts) {
  nn::RngStream init(cfg.seed);
  model::HeteroAttentionConv conv("conv", cfg, init);
  const auto seg = model::EdgeSegments::build(g.topology);
  model::TypedFeatures x, w;
  for (std::size_t t = 0; t < 2; ++t) {
    const std::size_t n = g.topology.nodes[t];
    x[t] = nn::Matrix(n, cfg.hidden_dim);
    w[t] = nn::Matrix(n, cfg.hidden_dim);
    for (double& v : x[t].values()) v = rng.normal();
    for (double& v : w[t].values()) v = rng.normal();
  }
  auto weighted = [&](const model::TypedFeatures& y) {
    double s = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t i = 0; i < y[t].size(); ++i) s += y[t].values()[i] * w[t].values()[i];
    }
    return s;
  };
  nn::ParameterRefs params;
  conv.collect(params);
  auto loss = [&] { return weighted(conv.forward(g.topology, seg, x, false, nullptr, nullptr)); };
  auto loss_and_grad = [&] {
    nn::zero_grads(params);
    model::HeteroAttentionConv::Cache cache;
    conv.forward(g.topology, seg, x, false, nullptr, &cache);
    conv.backward(g.topology, seg, cache, w);
  };
  return nn::grad_check(loss, loss_and_grad, params, tolerance, opts);
}

std::vector<ingest::FlowRecord> records_at(const std::vector<double>& seconds, std::size_t width) {
  std::vector<ingest::FlowRecord> out;
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    ingest::FlowRecord r;
    r.flow_id = "r" + std::to_string(i);
    r.src_ip = "192.168.0." + std::to_string(i % 250);
    r.dst_ip = "10.0.0.1";
    r.src_port = static_cast<std::uint16_t>(40000 + i);
    r.dst_port = 80;
    r.protocol = 6;
    r.timestamp_us = 1'700'000'000'000'000 + static_cast<std::int64_t>(seconds[i] * 1e6);
    r.features.assign(width, static_cast<double>(i));
    r.label = i % 2 ? ingest::Label::Attack : ingest::Label::Benign;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<OracleBatch> direct_scan_windows(const std::vector<std::int64_t>& ts, std::int64_t delta_us,
                                             std::size_t max_flows) {
  std::vector<OracleBatch> out;
  std::size_t i = 0;
  while (i < ts.size()) {
    std::size_t span_end = i + 1;
    while (span_end < ts.size() && ts[span_end] - ts[i] < delta_us) ++span_end;
    const bool span_binds = span_end < ts.size();
    const std::size_t size_end = i + max_flows;
    OracleBatch b{i, std::min(span_end, size_end), graph::CloseReason::Flush};
    if (size_end <= span_end) b.reason = graph::CloseReason::Size;
    else if (span_binds) b.reason = graph::CloseReason::Span;
    out.push_back(b);
    i = b.end;
  }
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("hgunet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ServiceFixture make_service_fixture(const std::filesystem::path& dir, std::size_t train_flows,
                                    std::size_t stream_flows, std::size_t epochs) {
  const auto schema = ingest::resolve_schema("synthetic");
  train::SyntheticConfig sc;
  sc.flows = train_flows;
  const auto table = ingest::select_features(train::generate_synthetic(sc), schema.default_feature_subset());

  train::ExperimentConfig cfg;
  cfg.schema = "synthetic";
  cfg.model = small_config(4, 8);
  cfg.model.hidden_dim = 16;
  cfg.model.head_dims = {16, 8, 1};
  cfg.train.epochs = epochs;
  cfg.train.adam.lr = 3e-3;
  cfg.folds = 5;
  cfg.split_seed = 3;
  const auto plan = train::make_folds(train::stratification_keys(table), cfg.folds, cfg.split_seed);
  auto outcome = train::run_fold(table, plan, 0, cfg, true);

  ServiceFixture fx;
  fx.bundle = dir / "bundle.json";
  train::save_bundle(*outcome.bundle, fx.bundle);

  sc.flows = stream_flows;
  sc.seed = 99;
  fx.stream_csv = dir / "stream.csv";
  train::write_synthetic_csv(fx.stream_csv, train::generate_synthetic(sc));

  fx.config_file = dir / "service.json";
  std::ofstream(fx.config_file) << nlohmann::json{{"model", "bundle.json"}}.dump(2);
  fx.config = service::load_service_config(fx.config_file);
  return fx;
}

}  // namespace hgunet::testkit
