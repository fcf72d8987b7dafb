#include "hgunet/graph/builder.hpp"

#include <unordered_map>

#include "hgunet/error.hpp"

namespace hgunet::graph {

std::string_view to_string(EdgeType e) {
  switch (e) {
    case EdgeType::SrcToFlow: return "src_to_flow";
    case EdgeType::FlowToDst: return "flow_to_dst";
    case EdgeType::DstToFlow: return "dst_to_flow";
    case EdgeType::FlowToSrc: return "flow_to_src";
  }
  return "?";
}

std::string_view to_string(NodeType t) { return t == NodeType::Host ? "host" : "flow"; }

std::size_t Topology::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.size();
  return n;
}

void Topology::validate() const {
  for (EdgeType et : kEdgeTypes) {
    const std::size_t ns = count(source_type(et));
    const std::size_t nt = count(target_type(et));
    for (const Edge& e : of(et)) {
      if (e.src >= ns || e.dst >= nt) {
        throw ConsistencyError(std::string(to_string(et)) + " edge (" + std::to_string(e.src) +
                               "," + std::to_string(e.dst) + ") out of range");
      }
    }
  }
}

std::vector<std::size_t> HeteroGraph::in_window_flows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < historical.size(); ++i) {
    if (!historical[i]) rows.push_back(i);
  }
  return rows;
}

void HeteroGraph::validate() const {
  if (topology.count(NodeType::Host) != host_ids.size() ||
      topology.count(NodeType::Flow) != flow_ids.size()) {
    throw ConsistencyError("graph node counts disagree with topology");
  }
  if (host_features.rows() != host_ids.size() || flow_features.rows() != flow_ids.size()) {
    throw ConsistencyError("graph feature rows disagree with node counts");
  }
  if (historical.size() != flow_ids.size() || flow_labels.size() != flow_ids.size()) {
    throw ConsistencyError("graph masks/labels disagree with flow count");
  }
  topology.validate();
  std::vector<int> src_in(flow_ids.size(), 0), dst_out(flow_ids.size(), 0);
  for (const Edge& e : topology.of(EdgeType::SrcToFlow)) ++src_in[e.dst];
  for (const Edge& e : topology.of(EdgeType::FlowToDst)) ++dst_out[e.src];
  for (std::size_t f = 0; f < flow_ids.size(); ++f) {
    if (!historical[f] && (src_in[f] != 1 || dst_out[f] != 1)) {
      throw ConsistencyError("in-window flow " + flow_ids[f] +
                             " lacks exactly one source and one destination edge");
    }
  }
}

HeteroGraph build_graph(const Batch& batch, const SlidingWindowMemory& memory,
                        const BuildOptions& opts) {
  if (batch.records.empty()) throw ConfigError("build_graph: empty batch");
  HeteroGraph g;
  std::unordered_map<std::string, std::size_t> host_index;
  auto host = [&](const std::string& ip) {
    auto [it, fresh] = host_index.try_emplace(ip, g.host_ids.size());
    if (fresh) g.host_ids.push_back(ip);
    return it->second;
  };

  const std::size_t width = batch.records.front().features.size();
  std::vector<const std::vector<double>*> rows;
  auto& edges = g.topology.edges;
  auto wire_src = [&](std::size_t h, std::size_t f) {
    edges[index(EdgeType::SrcToFlow)].push_back({h, f});
    edges[index(EdgeType::FlowToSrc)].push_back({f, h});
  };
  auto wire_dst = [&](std::size_t h, std::size_t f) {
    edges[index(EdgeType::FlowToDst)].push_back({f, h});
    edges[index(EdgeType::DstToFlow)].push_back({h, f});
  };

  for (const auto& r : batch.records) {
    if (r.features.size() != width) throw DimensionError("build_graph: ragged feature vectors");
    const std::size_t f = g.flow_ids.size();
    g.flow_ids.push_back(r.flow_id);
    g.flow_labels.push_back(ingest::binary_target(r.label));
    g.historical.push_back(0);
    rows.push_back(&r.features);
    wire_src(host(r.src_ip), f);
    wire_dst(host(r.dst_ip), f);
  }

  if (opts.use_memory) {
    // Historical flows attach only to endpoints present in this window,
    // and to every such endpoint.
    std::unordered_map<std::string, std::size_t> historical_index;
    const std::size_t window_hosts = g.host_ids.size();
    for (std::size_t h = 0; h < window_hosts; ++h) {
      const std::string ip = g.host_ids[h];
      const auto& ring = memory.ring(ip);
      const std::size_t take = std::min(ring.size(), memory.config().per_host);
      for (std::size_t k = ring.size() - take; k < ring.size(); ++k) {
        const MemoryEntry& e = *ring[k];
        if (e.features.size() != width) continue;
        auto [it, fresh] = historical_index.try_emplace(e.flow_id, g.flow_ids.size());
        const std::size_t f = it->second;
        if (fresh) {
          g.flow_ids.push_back(e.flow_id);
          g.flow_labels.push_back(e.label);
          g.historical.push_back(1);
          rows.push_back(&e.features);
        }
        if (e.src_ip == ip) wire_src(h, f);
        if (e.dst_ip == ip) wire_dst(h, f);
      }
    }
  }

  g.topology.nodes = {g.host_ids.size(), g.flow_ids.size()};
  g.host_features = nn::Matrix(g.host_ids.size(), opts.host_dim, opts.host_fill);
  g.flow_features = nn::Matrix(g.flow_ids.size(), width);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    std::copy(rows[f]->begin(), rows[f]->end(), g.flow_features.row(f).begin());
  }
  return g;
}

void update_memory(SlidingWindowMemory& memory, const Batch& batch) { memory.update(batch); }

GraphSequence build_graph_sequence(const std::vector<ingest::FlowRecord>& records,
                                   const WindowConfig& window, const MemoryConfig& memory_cfg,
                                   const BuildOptions& opts) {
  GraphSequence seq;
  seq.batches = window_batch(records, window);
  SlidingWindowMemory memory(memory_cfg);
  seq.graphs.reserve(seq.batches.size());
  for (const auto& b : seq.batches) {
    seq.graphs.push_back(build_graph(b, memory, opts));
    memory.update(b);
  }
  return seq;
}

void to_json(nlohmann::json& j, const BuildOptions& o) {
  j = {{"host_dim", o.host_dim}, {"host_fill", o.host_fill}, {"use_memory", o.use_memory}};
}

void from_json(const nlohmann::json& j, BuildOptions& o) {
  BuildOptions d;
  o.host_dim = j.value("host_dim", d.host_dim);
  o.host_fill = j.value("host_fill", d.host_fill);
  o.use_memory = j.value("use_memory", d.use_memory);
}

}  // namespace hgunet::graph
