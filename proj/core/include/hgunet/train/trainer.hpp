#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/error.hpp"
#include "hgunet/graph/hetero_graph.hpp"
#include "hgunet/model/hgunet.hpp"
#include "hgunet/numeric/adam.hpp"
#include "hgunet/train/metrics.hpp"

namespace hgunet::train {

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  nn::AdamOptions adam;
  std::size_t epochs = 30;
  std::size_t patience = 10;  // stale epochs tolerated before stopping
  bool class_weighting = true;
  std::uint64_t seed = 0;     // window shuffling, dropout, pooling noise

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_f1 = 0.0;
  bool improved = false;
};

struct TrainState {
  std::size_t epoch = 0;
  double best_val_f1 = -1.0;
  std::size_t stale_epochs = 0;
  std::uint64_t seed = 0;
  std::int64_t optimizer_steps = 0;
};

struct ClassWeights {
  double benign = 1.0;
  double attack = 1.0;
};

/// Inverse class frequency over the labeled in-window flows: w_c = N / (2·N_c).
ClassWeights class_weights(const std::vector<graph::HeteroGraph>& graphs);

struct WindowLoss {
  double loss = 0.0;
  std::size_t flows = 0;
  std::vector<double> grad_logits;  // aligned with ForwardResult::flow_rows
};

/// Weighted BCE over the labeled in-window flows of one forward pass;
/// flows without a target get zero gradient.
WindowLoss window_loss(const graph::HeteroGraph& g, const model::ForwardResult& r, const ClassWeights& w);

struct TrainResult {
  model::HGUNet model;  // best validation checkpoint
  TrainState state;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  bool early_stopped = false;
};

struct EvalResult {
  Metrics metrics;
  std::vector<Prediction> predictions;
};

/// Scores every in-window flow (evaluation mode) and thresholds at 0.5.
/// Throws ConfigError when there is nothing labeled to evaluate.
EvalResult evaluate(const model::HGUNet& model, const std::vector<graph::HeteroGraph>& graphs,
                    double threshold = kDecisionThreshold);

/// Shuffled-window epochs with Adam; keeps the best validation-F1 model.
/// Throws TrainingDivergedError on a non-finite loss.
TrainResult train_model(const model::ModelConfig& model_cfg, const std::vector<graph::HeteroGraph>& train,
                        const std::vector<graph::HeteroGraph>& val, const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const EpochRecord& e);
void to_json(nlohmann::json& j, const TrainState& s);

}  // namespace hgunet::train
