#include "hgunet/model/topology.hpp"

#include "hgunet/error.hpp"

namespace hgunet::model {

namespace {
constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
}

Topology induce_subgraph(const Topology& topo, const TypedIndices& kept) {
  std::array<std::vector<std::size_t>, 2> remap;
  Topology out;
  for (NodeType t : graph::kNodeTypes) {
    const auto ti = graph::index(t);
    remap[ti].assign(topo.nodes[ti], kDropped);
    for (std::size_t pos = 0; pos < kept[ti].size(); ++pos) {
      const std::size_t old = kept[ti][pos];
      if (old >= topo.nodes[ti]) throw ConsistencyError("induce_subgraph: kept index out of range");
      remap[ti][old] = pos;
    }
    out.nodes[ti] = kept[ti].size();
  }
  for (EdgeType e : graph::kEdgeTypes) {
    const auto& s = remap[graph::index(graph::source_type(e))];
    const auto& d = remap[graph::index(graph::target_type(e))];
    for (const auto& edge : topo.of(e)) {
      if (s[edge.src] != kDropped && d[edge.dst] != kDropped) out.of(e).push_back({s[edge.src], d[edge.dst]});
    }
  }
  return out;
}

EdgeSegments EdgeSegments::build(const Topology& topo) {
  EdgeSegments seg;
  for (EdgeType e : graph::kEdgeTypes) {
    const auto ei = graph::index(e);
    std::vector<std::size_t> dst;
    dst.reserve(topo.of(e).size());
    for (const auto& edge : topo.of(e)) dst.push_back(edge.dst);
    seg.by_dst[ei] = nn::SegmentIndex::build(dst);
    for (const auto& members : seg.by_dst[ei].members) seg.dst_of_segment[ei].push_back(dst[members.front()]);
  }
  return seg;
}

}  // namespace hgunet::model
