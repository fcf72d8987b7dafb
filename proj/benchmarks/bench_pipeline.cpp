#include <filesystem>

#include <benchmark/benchmark.h>

#include "hgunet/graph/builder.hpp"
#include "hgunet/graph/window.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/ingest/standardizer.hpp"
#include "hgunet/model/hgunet.hpp"
#include "hgunet/service/decision.hpp"
#include "hgunet/service/forensic_log.hpp"
#include "hgunet/train/synthetic.hpp"

using namespace hgunet;

namespace {

// One full-size window of synthetic flows, standardized.
struct Window {
  graph::Batch batch;
  std::size_t flow_dim = 0;

  explicit Window(std::size_t flows) {
    train::SyntheticConfig sc;
    sc.flows = flows;
    auto table = ingest::select_features(train::generate_synthetic(sc),
                                         ingest::resolve_schema("synthetic").default_feature_subset());
    const auto std_ = ingest::fit_standardizer(table);
    for (auto& r : table.records) batch.records.push_back(ingest::apply_standardizer(r, std_));
    flow_dim = std_.output_width();
  }
};

void BM_BuildGraph(benchmark::State& state) {
  const Window w(static_cast<std::size_t>(state.range(0)));
  graph::SlidingWindowMemory memory;
  memory.update(w.batch);  // historical context from a previous window
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_graph(w.batch, memory));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(128)->Arg(512);

void BM_ForwardEval(benchmark::State& state) {
  const Window w(static_cast<std::size_t>(state.range(0)));
  const graph::SlidingWindowMemory memory;
  const auto g = graph::build_graph(w.batch, memory);
  model::ModelConfig cfg;
  cfg.flow_dim = w.flow_dim;
  const model::HGUNet net(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardEval)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const Window w(static_cast<std::size_t>(state.range(0)));
  const graph::SlidingWindowMemory memory;
  const auto g = graph::build_graph(w.batch, memory);
  model::ModelConfig cfg;
  cfg.flow_dim = w.flow_dim;
  model::HGUNet net(cfg);
  nn::RngStream rng(1);
  model::ForwardOptions opts;
  opts.training = true;
  opts.rng = &rng;
  opts.keep_trace = true;
  for (auto _ : state) {
    const auto r = net.forward(g, opts);
    const std::vector<double> grad(r.logits.size(), 1.0);
    net.backward(r, grad);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ForensicAppend(benchmark::State& state) {
  const auto path = std::filesystem::temp_directory_path() / "hgunet_bench_forensic.jsonl";
  {
    service::ForensicLog log(path, {{"run", "bench"}});
    std::uint64_t i = 0;
    for (auto _ : state) {
      log.append({{"type", "flow"}, {"flow_id", "f" + std::to_string(i++)}, {"p", 0.73}, {"action", "rate_limit"}});
    }
  }
  std::filesystem::remove(path);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForensicAppend);

void BM_Decide(benchmark::State& state) {
  const service::DecisionThresholds t;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(service::decide(static_cast<double>(i) / 1000.0, t));
    i = (i + 1) % 1001;
  }
}
BENCHMARK(BM_Decide);

}  // namespace

BENCHMARK_MAIN();
