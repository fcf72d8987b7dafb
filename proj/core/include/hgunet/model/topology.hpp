#pragma once

#include <array>
#include <vector>

#include "hgunet/graph/hetero_graph.hpp"
#include "hgunet/numeric/matrix.hpp"
#include "hgunet/numeric/ops.hpp"

namespace hgunet::model {

using graph::EdgeType;
using graph::NodeType;
using graph::Topology;

/// One feature matrix per node type, indexed by graph::index(NodeType).
using TypedFeatures = std::array<nn::Matrix, 2>;
using TypedIndices = std::array<std::vector<std::size_t>, 2>;

/// Subgraph on the kept nodes (ascending indices per type); an edge survives
/// iff both endpoints do. Endpoints are renumbered to positions in `kept`.
Topology induce_subgraph(const Topology& topo, const TypedIndices& kept);

/// Edge positions grouped by destination node, one index per edge type.
struct EdgeSegments {
  std::array<nn::SegmentIndex, 4> by_dst;
  std::array<std::vector<std::size_t>, 4> dst_of_segment;

  static EdgeSegments build(const Topology& topo);
};

}  // namespace hgunet::model
