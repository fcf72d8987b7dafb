#include "hgunet/train/crossval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "hgunet/error.hpp"
#include "hgunet/ingest/parser.hpp"
#include "hgunet/ingest/schema.hpp"

namespace hgunet::train {

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("experiment: folds must be at least 2");
  if (threads == 0) throw ConfigError("experiment: threads must be at least 1");
  train.validate();
  window.validate();
  memory.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"schema", c.schema},
       {"features", c.features},
       {"label_policy", std::string(ingest::to_string(c.label_policy))},
       {"model", c.model},
       {"train", c.train},
       {"window", c.window},
       {"memory", c.memory},
       {"build", c.build},
       {"folds", c.folds},
       {"validation_fraction", c.validation_fraction},
       {"split_seed", c.split_seed},
       {"subsample", c.subsample},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  ExperimentConfig d;
  c.schema = j.value("schema", d.schema);
  c.features = j.value("features", d.features);
  c.label_policy = ingest::label_policy_from_string(j.value("label_policy", std::string(ingest::to_string(d.label_policy))));
  c.model = j.value("model", d.model);
  c.train = j.value("train", d.train);
  c.window = j.value("window", d.window);
  c.memory = j.value("memory", d.memory);
  c.build = j.value("build", d.build);
  c.folds = j.value("folds", d.folds);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.split_seed = j.value("split_seed", d.split_seed);
  c.subsample = j.value("subsample", d.subsample);
  c.threads = j.value("threads", d.threads);
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read experiment config " + path.string());
  try {
    auto cfg = nlohmann::json::parse(in).get<ExperimentConfig>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("experiment config " + path.string() + ": " + e.what());
  }
}

std::vector<int> stratification_keys(const ingest::FlowTable& table) {
  std::vector<int> keys;
  keys.reserve(table.records.size());
  for (const auto& r : table.records) keys.push_back(static_cast<int>(r.label));
  return keys;
}

std::vector<graph::HeteroGraph> build_split_graphs(const ingest::FlowTable& table, std::span<const std::size_t> indices,
                                                   const ingest::Standardizer& standardizer,
                                                   const ExperimentConfig& cfg) {
  return build_split_graphs(table, indices, standardizer, cfg.window, cfg.memory, cfg.build);
}

std::vector<graph::HeteroGraph> build_split_graphs(const ingest::FlowTable& table, std::span<const std::size_t> indices,
                                                   const ingest::Standardizer& standardizer,
                                                   const graph::WindowConfig& window, const graph::MemoryConfig& memory,
                                                   const graph::BuildOptions& build) {
  std::vector<ingest::FlowRecord> records;
  records.reserve(indices.size());
  for (std::size_t i : indices) records.push_back(ingest::apply_standardizer(table.records.at(i), standardizer));
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; });
  return graph::build_graph_sequence(records, window, memory, build).graphs;
}

void assert_no_leakage(const Fold& fold) {
  const std::unordered_set<std::size_t> fit(fold.train.begin(), fold.train.end());
  for (const auto* part : {&fold.validation, &fold.test}) {
    for (std::size_t i : *part) {
      if (fit.count(i)) throw ConsistencyError("leakage: index " + std::to_string(i) + " is in the standardizer fit set");
    }
  }
}

FoldOutcome run_fold(const ingest::FlowTable& table, const FoldPlan& plan, std::size_t f, const ExperimentConfig& cfg,
                     bool keep_bundle, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (f >= plan.folds.size()) throw ConfigError("fold " + std::to_string(f) + " outside the plan");
  const Fold& fold = plan.folds[f];
  assert_no_leakage(fold);

  std::vector<const ingest::FlowRecord*> fit_set;
  for (std::size_t i : fold.train) fit_set.push_back(&table.records[i]);
  const ingest::Standardizer standardizer = ingest::fit_standardizer(table.feature_names, fit_set);

  const auto train_graphs = build_split_graphs(table, fold.train, standardizer, cfg);
  const auto val_graphs = build_split_graphs(table, fold.validation, standardizer, cfg);
  const auto test_graphs = build_split_graphs(table, fold.test, standardizer, cfg);

  model::ModelConfig mcfg = cfg.model;
  mcfg.host_dim = cfg.build.host_dim;
  mcfg.flow_dim = standardizer.output_width();
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.train.seed + f;  // independent of which thread runs the fold
  auto trained = train_model(mcfg, train_graphs, val_graphs, tcfg, on_epoch);

  FoldOutcome out;
  out.fold = f;
  out.train_size = fold.train.size();
  out.validation_size = fold.validation.size();
  out.test_size = fold.test.size();
  auto eval = evaluate(trained.model, test_graphs);
  out.metrics = eval.metrics;
  out.predictions = std::move(eval.predictions);
  out.history = trained.history;
  out.best_epoch = trained.best_epoch;
  if (keep_bundle) {
    out.bundle.emplace(DetectorBundle{std::move(trained.model), cfg.schema, table.feature_names, standardizer,
                                      cfg.label_policy, cfg.window, cfg.memory, cfg.build,
                                      {{"fold", f}, {"folds", plan.k}, {"split_seed", plan.seed},
                                       {"validation_fraction", plan.validation_fraction}, {"subsample", cfg.subsample},
                                       {"best_epoch", trained.best_epoch}, {"test_metrics", out.metrics}}});
  }
  return out;
}

CrossvalReport run_crossval(const ingest::FlowTable& table, const ExperimentConfig& cfg,
                            std::span<const std::size_t> selection,
                            const std::function<void(std::size_t, const EpochRecord&)>& on_epoch) {
  cfg.validate();
  CrossvalReport report;
  report.plan = make_folds(stratification_keys(table), cfg.folds, cfg.split_seed, cfg.validation_fraction);
  std::vector<std::size_t> todo(selection.begin(), selection.end());
  if (todo.empty()) {
    for (std::size_t f = 0; f < report.plan.k; ++f) todo.push_back(f);
  }

  report.folds.resize(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  const auto worker = [&] {
    for (std::size_t slot = next++; slot < todo.size(); slot = next++) {
      try {
        const std::size_t f = todo[slot];
        std::function<void(const EpochRecord&)> cb;
        if (on_epoch) {
          cb = [&, f](const EpochRecord& e) {
            std::lock_guard lock(mu);
            on_epoch(f, e);
          };
        }
        report.folds[slot] = run_fold(table, report.plan, f, cfg, false, cb);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, todo.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  if (report.folds.size() >= 2) {
    std::vector<Metrics> m;
    for (const auto& o : report.folds) m.push_back(o.metrics);
    report.aggregate = aggregate_folds(m);
  }
  return report;
}

void write_crossval_outputs(const std::filesystem::path& dir, const CrossvalReport& report, const std::string& title) {
  std::filesystem::create_directories(dir);
  for (const auto& o : report.folds) {
    const auto fdir = dir / ("fold_" + std::to_string(o.fold));
    std::filesystem::create_directories(fdir);
    nlohmann::json metrics = o.metrics;
    metrics["fold"] = o.fold;
    metrics["sizes"] = {{"train", o.train_size}, {"validation", o.validation_size}, {"test", o.test_size}};
    metrics["best_epoch"] = o.best_epoch;
    std::ofstream(fdir / "metrics.json") << metrics.dump(2) << '\n';
    std::ofstream(fdir / "history.json") << nlohmann::json(o.history).dump(2) << '\n';
    write_prediction_dump(fdir / "predictions.jsonl", o.predictions);
  }
  if (report.aggregate) {
    std::ofstream(dir / "aggregate.json") << nlohmann::json(*report.aggregate).dump(2) << '\n';
    std::vector<Metrics> m;
    for (const auto& o : report.folds) m.push_back(o.metrics);
    std::ofstream(dir / "report.md") << markdown_report(title, m, *report.aggregate);
  }
}

ingest::FlowTable load_dataset(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  const auto schema = ingest::resolve_schema(cfg.schema);
  ingest::ParseOptions opts;
  opts.label_policy = cfg.label_policy;
  auto parsed = ingest::parse_flow_file(path, schema, opts);
  const auto subset = cfg.features.empty() ? schema.default_feature_subset() : cfg.features;
  ingest::FlowTable table = ingest::select_features(parsed.table, subset);
  if (cfg.subsample > 0 && cfg.subsample < table.records.size()) {
    const auto keep = stratified_subsample(stratification_keys(table), cfg.subsample, cfg.split_seed);
    std::vector<ingest::FlowRecord> records;
    records.reserve(keep.size());
    for (std::size_t i : keep) records.push_back(std::move(table.records[i]));
    table.records = std::move(records);
  }
  return table;
}

}  // namespace hgunet::train
