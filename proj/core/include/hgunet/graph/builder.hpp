#pragma once

#include <nlohmann/json.hpp>

#include "hgunet/graph/hetero_graph.hpp"
#include "hgunet/graph/memory.hpp"
#include "hgunet/graph/window.hpp"

namespace hgunet::graph {

struct BuildOptions {
  std::size_t host_dim = 4;   // d_h; hosts get an all-ones row
  double host_fill = 1.0;
  bool use_memory = true;
};

/// Batch (features already standardized) + memory snapshot → graph.
HeteroGraph build_graph(const Batch& batch, const SlidingWindowMemory& memory,
                        const BuildOptions& opts = {});

void to_json(nlohmann::json& j, const BuildOptions& o);
void from_json(const nlohmann::json& j, BuildOptions& o);

void update_memory(SlidingWindowMemory& memory, const Batch& batch);

/// Window + build + memory update over a whole time-ordered record list.
struct GraphSequence {
  std::vector<Batch> batches;
  std::vector<HeteroGraph> graphs;
};
GraphSequence build_graph_sequence(const std::vector<ingest::FlowRecord>& records,
                                   const WindowConfig& window, const MemoryConfig& memory,
                                   const BuildOptions& opts = {});

}  // namespace hgunet::graph
