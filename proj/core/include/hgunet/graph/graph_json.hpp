#pragma once

#include <nlohmann/json.hpp>

#include "hgunet/graph/hetero_graph.hpp"

namespace hgunet::graph {

/// Full dump: node arrays, typed edge arrays and masks. Keys are sorted so
/// dumps diff cleanly.
nlohmann::json graph_to_json(const HeteroGraph& g, bool include_features = false);

struct SubgraphOptions {
  std::size_t hops = 2;
  std::size_t max_nodes = 100;
};

/// Typed neighborhood of one flow node (BFS over all four edge types),
/// capped at max_nodes with "truncated" set when the cap bites.
nlohmann::json flow_subgraph_json(const HeteroGraph& g, std::size_t flow_row,
                                  const SubgraphOptions& opts = {});

}  // namespace hgunet::graph
