#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "hgunet/error.hpp"
#include "hgunet/graph/builder.hpp"
#include "hgunet/graph/graph_json.hpp"
#include "hgunet/graph/memory.hpp"
#include "hgunet/graph/window.hpp"
#include "testkit.hpp"

using namespace hgunet;
using namespace hgunet::graph;
using testkit::records_at;

namespace {

ingest::FlowRecord flow(const std::string& id, const std::string& src, const std::string& dst, double t = 0) {
  ingest::FlowRecord r;
  r.flow_id = id;
  r.src_ip = src;
  r.dst_ip = dst;
  r.timestamp_us = 1'000'000 + static_cast<std::int64_t>(t * 1e6);
  r.features = {1.0, 2.0};
  r.label = ingest::Label::Benign;
  return r;
}

Batch batch_of(std::vector<ingest::FlowRecord> records, std::uint64_t id = 0) {
  Batch b;
  b.window_id = id;
  b.records = std::move(records);
  b.start_us = b.records.front().timestamp_us;
  b.end_us = b.records.back().timestamp_us;
  return b;
}

std::vector<std::size_t> sizes(const std::vector<Batch>& batches) {
  std::vector<std::size_t> out;
  for (const auto& b : batches) out.push_back(b.records.size());
  return out;
}

}  // namespace

TEST(Window, CountLimitBindsFirst) {
  const auto b = window_batch(records_at({0, 1, 2, 3, 4, 5}), {10.0, 5});
  EXPECT_EQ(sizes(b), (std::vector<std::size_t>{5, 1}));
  EXPECT_EQ(b[0].reason, CloseReason::Size);
  EXPECT_EQ(b[1].reason, CloseReason::Flush);
}

TEST(Window, SpanLimitBindsFirst) {
  const auto b = window_batch(records_at({0, 1, 3}), {2.0, 100});
  EXPECT_EQ(sizes(b), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(b[0].reason, CloseReason::Span);
}

TEST(Window, EmptyStreamEmitsNothing) { EXPECT_TRUE(window_batch({}, {}).empty()); }

TEST(Window, InvalidConfigRejected) {
  EXPECT_THROW(Windower({0.0, 5}), ConfigError);
  EXPECT_THROW(Windower({1.0, 0}), ConfigError);
}

TEST(Window, OutOfOrderRecordsStayInCurrentWindow) {
  Windower w({10.0, 100, 1.0});
  auto recs = records_at({0, 5, 4.5, 1});
  for (auto& r : recs) EXPECT_TRUE(w.push(r).empty());
  EXPECT_EQ(w.out_of_order(), 2u);
  EXPECT_EQ(w.skew_violations(), 1u);
  EXPECT_EQ(w.flush()->records.size(), 4u);
}

TEST(Window, RandomStreamsMatchDirectScan) {
  nn::RngStream rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.below(60);
    std::vector<double> t;
    double now = 0;
    for (std::size_t i = 0; i < n; ++i) {
      now += rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 3);
      t.push_back(now);
    }
    const WindowConfig cfg{rng.uniform(0.5, 8.0), 1 + rng.below(10)};
    const auto recs = records_at(t);
    const auto got = window_batch(recs, cfg);
    std::vector<std::int64_t> ts;
    for (const auto& r : recs) ts.push_back(r.timestamp_us);
    const auto want = testkit::direct_scan_windows(ts, std::llround(cfg.delta_t_s * 1e6), cfg.max_flows);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t b = 0; b < got.size(); ++b) {
      EXPECT_EQ(got[b].records.size(), want[b].end - want[b].begin);
      EXPECT_EQ(got[b].records.front().flow_id, recs[want[b].begin].flow_id);
      EXPECT_EQ(got[b].reason, want[b].reason);
    }
  }
}

TEST(Builder, TwoFlowBatch) {
  SlidingWindowMemory memory;
  const auto g = build_graph(batch_of({flow("f1", "A", "B"), flow("f2", "A", "C")}), memory);
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.host_count(), 3u);
  EXPECT_EQ(g.flow_count(), 2u);
  for (EdgeType et : kEdgeTypes) EXPECT_EQ(g.topology.of(et).size(), 2u) << to_string(et);
  EXPECT_EQ(g.topology.edge_count(), 8u);
  for (double v : g.host_features.values()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(g.host_features.cols(), 4u);
}

TEST(Builder, HistoricalFlowLinksOnlyToSharedEndpoint) {
  SlidingWindowMemory memory;
  memory.update(batch_of({flow("old", "A", "Z")}));
  const auto g = build_graph(batch_of({flow("f1", "A", "B"), flow("f2", "A", "C")}), memory);
  EXPECT_NO_THROW(g.validate());
  ASSERT_EQ(g.flow_count(), 3u);
  EXPECT_EQ(g.flow_ids[2], "old");
  EXPECT_EQ(g.historical, (std::vector<std::uint8_t>{0, 0, 1}));
  EXPECT_EQ(g.host_count(), 3u);  // Z is not added
  std::set<std::pair<std::string, std::string>> touching;
  for (EdgeType et : kEdgeTypes) {
    for (const Edge& e : g.topology.of(et)) {
      const bool host_src = source_type(et) == NodeType::Host;
      const std::size_t f = host_src ? e.dst : e.src, h = host_src ? e.src : e.dst;
      if (f == 2) touching.insert({std::string(to_string(et)), g.host_ids[h]});
    }
  }
  const std::set<std::pair<std::string, std::string>> expected = {{"src_to_flow", "A"}, {"flow_to_src", "A"}};
  EXPECT_EQ(touching, expected);
  EXPECT_EQ(g.in_window_flows(), (std::vector<std::size_t>{0, 1}));
}

TEST(Builder, SelfLoopFlowIsLegal) {
  SlidingWindowMemory memory;
  const auto g = build_graph(batch_of({flow("f", "A", "A")}), memory);
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.host_count(), 1u);
  EXPECT_EQ(g.topology.edge_count(), 4u);
}

TEST(Builder, EmptyBatchRejected) {
  SlidingWindowMemory memory;
  EXPECT_THROW(build_graph(Batch{}, memory), ConfigError);
}

TEST(Builder, NodeCountsMatchSetOracle) {
  nn::RngStream rng(32);
  SlidingWindowMemory memory({3, 50});
  for (int round = 0; round < 40; ++round) {
    std::vector<ingest::FlowRecord> recs;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      recs.push_back(flow("r" + std::to_string(round) + "-" + std::to_string(i), "h" + std::to_string(rng.below(8)),
                          "h" + std::to_string(rng.below(8)), round));
    }
    const auto b = batch_of(recs, round);
    const auto g = build_graph(b, memory);
    ASSERT_NO_THROW(g.validate());

    std::set<std::string> ips, historical;
    for (const auto& r : recs) {
      ips.insert(r.src_ip);
      ips.insert(r.dst_ip);
    }
    for (const auto& ip : ips) {
      const auto& ring = memory.ring(ip);
      for (const auto& e : ring) historical.insert(e->flow_id);
    }
    EXPECT_EQ(g.host_count(), ips.size());
    EXPECT_EQ(g.flow_count(), recs.size() + historical.size());
    // In-window flows have degree 4.
    std::vector<int> degree(g.flow_count(), 0);
    for (EdgeType et : kEdgeTypes) {
      for (const Edge& e : g.topology.of(et)) ++degree[source_type(et) == NodeType::Flow ? e.src : e.dst];
    }
    for (std::size_t f : g.in_window_flows()) EXPECT_EQ(degree[f], 4);
    memory.update(b);
  }
}

TEST(Builder, RecordOrderYieldsIsomorphicGraph) {
  nn::RngStream rng(33);
  std::vector<ingest::FlowRecord> recs;
  for (int i = 0; i < 15; ++i) {
    recs.push_back(flow("f" + std::to_string(i), "h" + std::to_string(rng.below(5)), "h" + std::to_string(rng.below(5))));
  }
  auto canonical = [](const HeteroGraph& g) {
    std::set<std::tuple<int, std::string, std::string>> out;
    for (EdgeType et : kEdgeTypes) {
      for (const Edge& e : g.topology.of(et)) {
        const bool host_src = source_type(et) == NodeType::Host;
        out.insert({static_cast<int>(et), host_src ? g.host_ids[e.src] : g.flow_ids[e.src],
                    host_src ? g.flow_ids[e.dst] : g.host_ids[e.dst]});
      }
    }
    return out;
  };
  SlidingWindowMemory memory;
  const auto a = build_graph(batch_of(recs), memory);
  rng.shuffle(std::span<ingest::FlowRecord>(recs));
  const auto b = build_graph(batch_of(recs), memory);
  EXPECT_EQ(canonical(a), canonical(b));
}

TEST(Memory, PerHostCapKeepsNewest) {
  SlidingWindowMemory memory({2, 100});
  memory.update(batch_of({flow("1", "A", "X"), flow("2", "A", "Y"), flow("3", "A", "Z")}));
  const auto& ring = memory.ring("A");
  ASSERT_EQ(ring.size(), 2u);
  EXPECT_EQ(ring[0]->flow_id, "2");
  EXPECT_EQ(ring[1]->flow_id, "3");
}

TEST(Memory, FlowSitsInBothEndpointRings) {
  SlidingWindowMemory memory;
  memory.update(batch_of({flow("ab", "A", "B")}));
  ASSERT_EQ(memory.ring("A").size(), 1u);
  ASSERT_EQ(memory.ring("B").size(), 1u);
  EXPECT_EQ(memory.ring("A")[0]->flow_id, "ab");
  EXPECT_EQ(memory.ring("B")[0]->flow_id, "ab");
  EXPECT_TRUE(memory.ring("C").empty());
}

TEST(Memory, SizeBoundedByCaps) {
  nn::RngStream rng(34);
  for (std::size_t G : {5u, 40u, 1000u}) {
    SlidingWindowMemory memory({3, G});
    std::set<std::string> hosts;
    for (int round = 0; round < 60; ++round) {
      std::vector<ingest::FlowRecord> recs;
      for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
        const auto s = "h" + std::to_string(rng.below(20)), d = "h" + std::to_string(rng.below(20));
        hosts.insert(s);
        hosts.insert(d);
        recs.push_back(flow(std::to_string(round) + "." + std::to_string(i), s, d, round));
      }
      memory.update(batch_of(recs));
      EXPECT_LE(memory.size(), std::min(hosts.size() * 3, G));
      for (const auto& h : hosts) {
        const auto& ring = memory.ring(h);
        EXPECT_LE(ring.size(), 3u);
        for (std::size_t k = 1; k < ring.size(); ++k) EXPECT_LT(ring[k - 1]->seq, ring[k]->seq);
      }
    }
  }
}

TEST(Builder, SequenceIsDeterministic) {
  nn::RngStream rng(35);
  std::vector<double> t;
  for (int i = 0; i < 300; ++i) t.push_back(i * 0.1);
  auto recs = records_at(t, 3);
  for (auto& r : recs) r.src_ip = "s" + std::to_string(rng.below(10));
  const auto a = build_graph_sequence(recs, {2.0, 16}, {4, 64});
  const auto b = build_graph_sequence(recs, {2.0, 16}, {4, 64});
  ASSERT_EQ(a.graphs.size(), b.graphs.size());
  for (std::size_t i = 0; i < a.graphs.size(); ++i) {
    EXPECT_EQ(graph_to_json(a.graphs[i], true), graph_to_json(b.graphs[i], true));
  }
}

TEST(GraphJson, SubgraphIsTwoHopNeighbourhood) {
  SlidingWindowMemory memory;
  const auto g = build_graph(
      batch_of({flow("f0", "A", "B"), flow("f1", "B", "C"), flow("f2", "C", "D"), flow("f3", "E", "F")}), memory);
  const auto j = flow_subgraph_json(g, 0);
  std::set<std::string> ids;
  for (const auto& n : j["nodes"]) ids.insert(n["id"].get<std::string>());
  // f0 → {A, B} → {f1}; C is three hops away.
  EXPECT_EQ(ids, (std::set<std::string>{"f0", "A", "B", "f1"}));
  EXPECT_FALSE(j["truncated"].get<bool>());
  const auto capped = flow_subgraph_json(g, 0, {2, 2});
  EXPECT_EQ(capped["nodes"].size(), 2u);
  EXPECT_TRUE(capped["truncated"].get<bool>());
}
