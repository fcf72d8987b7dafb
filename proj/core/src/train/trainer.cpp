#include "hgunet/train/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hgunet/numeric/loss.hpp"

namespace hgunet::train {

void TrainConfig::validate() const {
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ConfigError("train: learning rate must be positive");
  if (patience == 0) throw ConfigError("train: patience must be at least 1");
}

ClassWeights class_weights(const std::vector<graph::HeteroGraph>& graphs) {
  std::size_t n[2] = {0, 0};
  for (const auto& g : graphs) {
    for (std::size_t row : g.in_window_flows()) {
      if (g.flow_labels[row] == 0 || g.flow_labels[row] == 1) ++n[g.flow_labels[row]];
    }
  }
  const double total = static_cast<double>(n[0] + n[1]);
  ClassWeights w;
  if (n[0] > 0 && n[1] > 0) {
    w.benign = total / (2.0 * static_cast<double>(n[0]));
    w.attack = total / (2.0 * static_cast<double>(n[1]));
  }
  return w;
}

WindowLoss window_loss(const graph::HeteroGraph& g, const model::ForwardResult& r, const ClassWeights& w) {
  std::vector<double> p, y, weight;
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < r.flow_rows.size(); ++i) {
    const int label = g.flow_labels[r.flow_rows[i]];
    if (label != 0 && label != 1) continue;
    p.push_back(r.probabilities[i]);
    y.push_back(label);
    weight.push_back(label == 1 ? w.attack : w.benign);
    pos.push_back(i);
  }
  WindowLoss out;
  out.grad_logits.assign(r.flow_rows.size(), 0.0);
  out.flows = p.size();
  if (p.empty()) return out;
  const auto bce = nn::bce_loss(p, y, weight);
  out.loss = bce.loss;
  for (std::size_t k = 0; k < pos.size(); ++k) out.grad_logits[pos[k]] = bce.grad_logits[k];
  return out;
}

EvalResult evaluate(const model::HGUNet& model, const std::vector<graph::HeteroGraph>& graphs, double threshold) {
  EvalResult out;
  for (const auto& g : graphs) {
    const auto r = model.forward(g);
    for (std::size_t i = 0; i < r.flow_rows.size(); ++i) {
      const std::size_t row = r.flow_rows[i];
      out.predictions.push_back({g.flow_ids[row], r.probabilities[i], g.flow_labels[row]});
    }
  }
  out.metrics = metrics_from_predictions(out.predictions, threshold);
  if (out.metrics.confusion.total() == 0) throw ConfigError("evaluate: no labeled flows to evaluate");
  return out;
}

namespace {

double validation_f1(const model::HGUNet& model, const std::vector<graph::HeteroGraph>& val) {
  Confusion c;
  for (const auto& g : val) {
    const auto r = model.forward(g);
    for (std::size_t i = 0; i < r.flow_rows.size(); ++i) {
      const int label = g.flow_labels[r.flow_rows[i]];
      if (label >= 0) c.add(label, r.probabilities[i] >= kDecisionThreshold);
    }
  }
  return compute_metrics(c).f1;
}

}  // namespace

TrainResult train_model(const model::ModelConfig& model_cfg, const std::vector<graph::HeteroGraph>& train,
                        const std::vector<graph::HeteroGraph>& val, const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  model::HGUNet net(model_cfg);
  TrainResult result{net, {}, {}, 0, false};
  result.state.seed = cfg.seed;

  const ClassWeights weights = cfg.class_weighting ? class_weights(train) : ClassWeights{};
  nn::Adam adam(cfg.adam);
  nn::RngStream rng(cfg.seed);
  const auto params = net.parameters();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  model::ForwardOptions fwd;
  fwd.training = true;
  fwd.rng = &rng;
  fwd.keep_trace = true;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t loss_windows = 0;
    for (std::size_t w : order) {
      const auto& g = train[w];
      const auto r = net.forward(g, fwd);
      const auto wl = window_loss(g, r, weights);
      if (wl.flows == 0) continue;
      if (!std::isfinite(wl.loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " (lr " << adam.options().lr << ", step "
            << adam.steps() << ")";
        throw TrainingDivergedError(msg.str());
      }
      net.zero_grad();
      net.backward(r, wl.grad_logits);
      adam.step(params);
      loss_sum += wl.loss;
      ++loss_windows;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_windows ? loss_sum / static_cast<double>(loss_windows) : 0.0;
    rec.val_f1 = val.empty() ? 0.0 : validation_f1(net, val);
    // Without validation windows the latest parameters are kept.
    rec.improved = val.empty() || rec.val_f1 > result.state.best_val_f1;
    result.state.epoch = epoch;
    result.state.optimizer_steps = adam.steps();
    if (rec.improved) {
      result.state.best_val_f1 = std::max(result.state.best_val_f1, rec.val_f1);
      result.state.stale_epochs = 0;
      result.best_epoch = epoch;
      result.model = net;
    } else {
      ++result.state.stale_epochs;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (result.state.stale_epochs >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"adam", c.adam}, {"epochs", c.epochs}, {"patience", c.patience},
       {"class_weighting", c.class_weighting}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.adam = j.value("adam", d.adam);
  c.epochs = j.value("epochs", d.epochs);
  c.patience = j.value("patience", d.patience);
  c.class_weighting = j.value("class_weighting", d.class_weighting);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const EpochRecord& e) {
  j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_f1", e.val_f1}, {"improved", e.improved}};
}

void to_json(nlohmann::json& j, const TrainState& s) {
  j = {{"epoch", s.epoch}, {"best_val_f1", s.best_val_f1}, {"stale_epochs", s.stale_epochs},
       {"seed", s.seed}, {"optimizer_steps", s.optimizer_steps}};
}

}  // namespace hgunet::train
