#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/graph/builder.hpp"
#include "hgunet/ingest/flow_record.hpp"
#include "hgunet/ingest/standardizer.hpp"
#include "hgunet/model/config.hpp"
#include "hgunet/train/bundle.hpp"
#include "hgunet/train/folds.hpp"
#include "hgunet/train/metrics.hpp"
#include "hgunet/train/trainer.hpp"

namespace hgunet::train {

/// The declarative experiment file consumed by `train` and `crossval`.
struct ExperimentConfig {
  std::string schema = "cicflowmeter";
  std::vector<std::string> features;  // empty = schema default subset
  ingest::LabelPolicy label_policy = ingest::LabelPolicy::BinarySuspiciousAsAttack;
  model::ModelConfig model;           // host_dim/flow_dim are filled in per fold
  TrainConfig train;
  graph::WindowConfig window;
  graph::MemoryConfig memory;
  graph::BuildOptions build;
  std::size_t folds = 10;
  double validation_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::size_t subsample = 0;  // stratified subsample size, 0 = everything
  std::size_t threads = 1;    // folds run concurrently

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Stratification key per record (the canonical label).
std::vector<int> stratification_keys(const ingest::FlowTable& table);

/// Standardize the chosen records, sort them by time (stable), window them
/// and build graphs with a fresh memory.
std::vector<graph::HeteroGraph> build_split_graphs(const ingest::FlowTable& table, std::span<const std::size_t> indices,
                                                   const ingest::Standardizer& standardizer,
                                                   const ExperimentConfig& cfg);
std::vector<graph::HeteroGraph> build_split_graphs(const ingest::FlowTable& table, std::span<const std::size_t> indices,
                                                   const ingest::Standardizer& standardizer,
                                                   const graph::WindowConfig& window, const graph::MemoryConfig& memory,
                                                   const graph::BuildOptions& build);

struct FoldOutcome {
  std::size_t fold = 0;
  std::size_t train_size = 0, validation_size = 0, test_size = 0;
  Metrics metrics;
  std::vector<Prediction> predictions;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::optional<DetectorBundle> bundle;
};

/// Throws ConsistencyError if the standardizer fit set touches validation
/// or test indices.
void assert_no_leakage(const Fold& fold);

/// Fit on train, select on validation, report on test.
FoldOutcome run_fold(const ingest::FlowTable& table, const FoldPlan& plan, std::size_t fold,
                     const ExperimentConfig& cfg, bool keep_bundle = false,
                     const std::function<void(const EpochRecord&)>& on_epoch = {});

struct CrossvalReport {
  FoldPlan plan;
  std::vector<FoldOutcome> folds;
  std::optional<AggregateReport> aggregate;  // needs two or more folds
};

/// `selection` picks folds to run (empty = all). Deterministic regardless
/// of cfg.threads.
CrossvalReport run_crossval(const ingest::FlowTable& table, const ExperimentConfig& cfg,
                            std::span<const std::size_t> selection = {},
                            const std::function<void(std::size_t, const EpochRecord&)>& on_epoch = {});

/// fold_<i>/{metrics.json,predictions.jsonl,history.json}; plus
/// aggregate.json and report.md when there is an aggregate.
void write_crossval_outputs(const std::filesystem::path& dir, const CrossvalReport& report, const std::string& title);

/// Load a dataset per the experiment: parse, select features, subsample.
ingest::FlowTable load_dataset(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace hgunet::train
