#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hgunet/numeric/matrix.hpp"

namespace hgunet::graph {

enum class NodeType : std::uint8_t { Host = 0, Flow = 1 };

/// The four typed, directed relations between hosts and flows.
enum class EdgeType : std::uint8_t {
  SrcToFlow = 0,  // source host → flow
  FlowToDst = 1,  // flow → destination host
  DstToFlow = 2,  // destination host → flow (reverse of FlowToDst)
  FlowToSrc = 3,  // flow → source host (reverse of SrcToFlow)
};

inline constexpr std::array<EdgeType, 4> kEdgeTypes = {EdgeType::SrcToFlow, EdgeType::FlowToDst,
                                                       EdgeType::DstToFlow, EdgeType::FlowToSrc};
inline constexpr std::array<NodeType, 2> kNodeTypes = {NodeType::Host, NodeType::Flow};

constexpr std::size_t index(EdgeType e) { return static_cast<std::size_t>(e); }
constexpr std::size_t index(NodeType t) { return static_cast<std::size_t>(t); }

constexpr NodeType source_type(EdgeType e) {
  return (e == EdgeType::SrcToFlow || e == EdgeType::DstToFlow) ? NodeType::Host : NodeType::Flow;
}
constexpr NodeType target_type(EdgeType e) {
  return source_type(e) == NodeType::Host ? NodeType::Flow : NodeType::Host;
}

std::string_view to_string(EdgeType e);
std::string_view to_string(NodeType t);

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Node counts plus typed edge lists; edge endpoints index into the node
/// arrays of source_type(e) / target_type(e).
struct Topology {
  std::array<std::size_t, 2> nodes = {0, 0};
  std::array<std::vector<Edge>, 4> edges;

  std::size_t count(NodeType t) const { return nodes[index(t)]; }
  const std::vector<Edge>& of(EdgeType e) const { return edges[index(e)]; }
  std::vector<Edge>& of(EdgeType e) { return edges[index(e)]; }
  std::size_t edge_count() const;
  /// Throws ConsistencyError when any edge endpoint is out of range.
  void validate() const;
};

/// Temporal-enhanced host-connection graph for one window.
struct HeteroGraph {
  std::vector<std::string> host_ids;
  std::vector<std::string> flow_ids;
  nn::Matrix host_features;  // |hosts| × d_h
  nn::Matrix flow_features;  // |flows| × d_f
  Topology topology;
  std::vector<int> flow_labels;           // 1 attack, 0 benign, -1 none
  std::vector<std::uint8_t> historical;   // 1 = context-only flow node

  std::size_t host_count() const { return host_ids.size(); }
  std::size_t flow_count() const { return flow_ids.size(); }
  /// Flow rows that are scored (not historical), ascending.
  std::vector<std::size_t> in_window_flows() const;
  /// Checks the structural invariants; throws ConsistencyError on violation.
  void validate() const;
};

}  // namespace hgunet::graph
