#include "hgunet/graph/graph_json.hpp"

#include <deque>
#include <set>

namespace hgunet::graph {

nlohmann::json graph_to_json(const HeteroGraph& g, bool include_features) {
  nlohmann::json hosts = nlohmann::json::array();
  for (std::size_t i = 0; i < g.host_ids.size(); ++i) {
    hosts.push_back({{"index", i}, {"id", g.host_ids[i]}});
  }
  nlohmann::json flows = nlohmann::json::array();
  for (std::size_t i = 0; i < g.flow_ids.size(); ++i) {
    nlohmann::json f = {{"index", i},
                        {"id", g.flow_ids[i]},
                        {"historical", g.historical[i] != 0},
                        {"label", g.flow_labels[i]}};
    if (include_features) {
      auto row = g.flow_features.row(i);
      f["features"] = std::vector<double>(row.begin(), row.end());
    }
    flows.push_back(std::move(f));
  }
  nlohmann::json edges = nlohmann::json::object();
  for (EdgeType et : kEdgeTypes) {
    nlohmann::json list = nlohmann::json::array();
    for (const Edge& e : g.topology.of(et)) list.push_back({e.src, e.dst});
    edges[std::string(to_string(et))] = std::move(list);
  }
  return {{"hosts", hosts}, {"flows", flows}, {"edges", edges}};
}

nlohmann::json flow_subgraph_json(const HeteroGraph& g, std::size_t flow_row,
                                  const SubgraphOptions& opts) {
  using Node = std::pair<NodeType, std::size_t>;
  // Undirected adjacency over all typed edges.
  std::vector<std::vector<std::size_t>> host_adj(g.host_count()), flow_adj(g.flow_count());
  for (EdgeType et : kEdgeTypes) {
    for (const Edge& e : g.topology.of(et)) {
      if (source_type(et) == NodeType::Host) {
        host_adj[e.src].push_back(e.dst);
        flow_adj[e.dst].push_back(e.src);
      } else {
        flow_adj[e.src].push_back(e.dst);
        host_adj[e.dst].push_back(e.src);
      }
    }
  }
  std::set<Node> seen{{NodeType::Flow, flow_row}};
  std::vector<Node> order{{NodeType::Flow, flow_row}};
  std::deque<std::pair<Node, std::size_t>> queue{{{NodeType::Flow, flow_row}, 0}};
  bool truncated = false;
  while (!queue.empty()) {
    auto [node, depth] = queue.front();
    queue.pop_front();
    if (depth == opts.hops) continue;
    const auto& adj = node.first == NodeType::Host ? host_adj[node.second] : flow_adj[node.second];
    const NodeType other = node.first == NodeType::Host ? NodeType::Flow : NodeType::Host;
    std::set<std::size_t> sorted(adj.begin(), adj.end());
    for (std::size_t n : sorted) {
      Node next{other, n};
      if (seen.count(next)) continue;
      if (seen.size() >= opts.max_nodes) {
        truncated = true;
        continue;
      }
      seen.insert(next);
      order.push_back(next);
      queue.push_back({next, depth + 1});
    }
  }

  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [type, i] : order) {
    nlohmann::json n = {{"type", std::string(to_string(type))},
                        {"id", type == NodeType::Host ? g.host_ids[i] : g.flow_ids[i]},
                        {"highlight", type == NodeType::Flow && i == flow_row}};
    if (type == NodeType::Flow) n["historical"] = g.historical[i] != 0;
    nodes.push_back(std::move(n));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (EdgeType et : kEdgeTypes) {
    for (const Edge& e : g.topology.of(et)) {
      Node s{source_type(et), e.src}, t{target_type(et), e.dst};
      if (!seen.count(s) || !seen.count(t)) continue;
      edges.push_back({{"type", std::string(to_string(et))},
                       {"source", s.first == NodeType::Host ? g.host_ids[s.second] : g.flow_ids[s.second]},
                       {"target", t.first == NodeType::Host ? g.host_ids[t.second] : g.flow_ids[t.second]}});
    }
  }
  return {{"nodes", nodes}, {"edges", edges}, {"truncated", truncated},
          {"alerted_flow", g.flow_ids[flow_row]}, {"hops", opts.hops}};
}

}  // namespace hgunet::graph
