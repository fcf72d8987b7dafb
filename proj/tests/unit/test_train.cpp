#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hgunet/error.hpp"
#include "hgunet/ingest/parser.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/numeric/checkpoint.hpp"
#include "hgunet/train/bundle.hpp"
#include "hgunet/train/crossval.hpp"
#include "hgunet/train/folds.hpp"
#include "hgunet/train/metrics.hpp"
#include "hgunet/train/synthetic.hpp"
#include "hgunet/train/trainer.hpp"
#include "testkit.hpp"

using namespace hgunet;
using namespace hgunet::train;

namespace {

std::vector<int> balanced_labels(std::size_t n) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  return labels;
}

ExperimentConfig quick_experiment(std::size_t epochs) {
  ExperimentConfig cfg;
  cfg.schema = "synthetic";
  cfg.model = testkit::small_config(4, 8);
  cfg.model.hidden_dim = 16;
  cfg.model.head_dims = {16, 8, 1};
  cfg.train.epochs = epochs;
  cfg.train.adam.lr = 3e-3;
  cfg.folds = 5;
  cfg.split_seed = 11;
  return cfg;
}

ingest::FlowTable small_corpus(std::size_t flows, std::uint64_t seed = 7) {
  SyntheticConfig sc;
  sc.flows = flows;
  sc.seed = seed;
  auto table = generate_synthetic(sc);
  const auto schema = ingest::resolve_schema("synthetic");
  return ingest::select_features(table, schema.default_feature_subset());
}

}  // namespace

TEST(Folds, StratifiedTestFolds) {
  const auto plan = make_folds(balanced_labels(100), 10, 3);
  EXPECT_NO_THROW(plan.validate());
  for (const auto& f : plan.folds) {
    ASSERT_EQ(f.test.size(), 10u);
    std::size_t attacks = 0;
    for (auto i : f.test) attacks += i % 2;
    EXPECT_EQ(attacks, 5u);
  }
}

TEST(Folds, SeventyTwoEighteenTen) {
  for (std::size_t n : {100u, 997u, 1234u}) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % 7 == 0 ? 1 : 0;
    const auto plan = make_folds(labels, 10, 5);
    for (const auto& f : plan.folds) {
      EXPECT_LE(std::abs(static_cast<double>(f.train.size()) - 0.72 * n), 1.0 + 1e-9) << n;
      EXPECT_LE(std::abs(static_cast<double>(f.validation.size()) - 0.18 * n), 1.0 + 1e-9) << n;
      EXPECT_LE(std::abs(static_cast<double>(f.test.size()) - 0.10 * n), 1.0 + 1e-9) << n;
    }
  }
}

TEST(Folds, DeterministicAndDisjoint) {
  const auto labels = balanced_labels(300);
  const auto a = make_folds(labels, 5, 9), b = make_folds(labels, 5, 9), c = make_folds(labels, 5, 10);
  EXPECT_EQ(nlohmann::json(a), nlohmann::json(b));
  EXPECT_NE(nlohmann::json(a), nlohmann::json(c));
  for (const auto& f : a.folds) {
    std::set<std::size_t> seen;
    for (const auto* part : {&f.train, &f.validation, &f.test}) {
      for (auto i : *part) EXPECT_TRUE(seen.insert(i).second);
    }
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_NO_THROW(assert_no_leakage(f));
  }
}

TEST(Folds, RejectsTooFewMembers) {
  std::vector<int> labels(20, 0);
  labels[0] = labels[1] = 1;
  EXPECT_THROW(make_folds(labels, 5, 1), ConfigError);
  EXPECT_THROW(make_folds(balanced_labels(20), 1, 1), ConfigError);
}

TEST(Folds, LeakageGuardFires) {
  Fold f{{0, 1, 2}, {3}, {2, 4}};
  EXPECT_THROW(assert_no_leakage(f), ConsistencyError);
}

TEST(Folds, StratifiedSubsampleKeepsProportions) {
  std::vector<int> labels(1000);
  for (std::size_t i = 0; i < 1000; ++i) labels[i] = i < 300 ? 1 : 0;
  const auto s = stratified_subsample(labels, 100, 4);
  EXPECT_EQ(s.size(), 100u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::count_if(s.begin(), s.end(), [](std::size_t i) { return i < 300; }), 30);
  EXPECT_EQ(stratified_subsample(labels, 5000, 4).size(), 1000u);
}

TEST(Metrics, WorkedExample) {
  const auto m = compute_metrics({9, 1, 89, 1});
  EXPECT_DOUBLE_EQ(m.precision, 0.9);
  EXPECT_DOUBLE_EQ(m.recall, 0.9);
  EXPECT_NEAR(m.f1, 0.9, 1e-15);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.98);
}

TEST(Metrics, AllBenignPredictionsGiveZeroPrecision) {
  const auto m = compute_metrics({0, 0, 50, 10});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Metrics, ThresholdIsInclusive) {
  const std::vector<Prediction> preds = {{"a", 0.5, 1}, {"b", 0.4999999, 0}, {"c", 0.9, -1}};
  const auto m = metrics_from_predictions(preds);
  EXPECT_EQ(m.confusion, (Confusion{1, 0, 1, 0}));
}

TEST(Metrics, PredictionDumpRoundTripsExactly) {
  nn::RngStream rng(61);
  std::vector<Prediction> preds;
  for (int i = 0; i < 100; ++i) preds.push_back({"f" + std::to_string(i), rng.uniform(), static_cast<int>(rng.below(2))});
  std::stringstream buf;
  write_prediction_dump(buf, preds);
  const auto back = read_prediction_dump(buf);
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(back[i].p, preds[i].p);
    EXPECT_EQ(back[i].label, preds[i].label);
    EXPECT_EQ(back[i].flow_id, preds[i].flow_id);
  }
  EXPECT_EQ(metrics_from_predictions(back), metrics_from_predictions(preds));
}

TEST(Aggregate, TwoPointAndZeroDispersion) {
  Metrics a, b;
  a.f1 = 0.95;
  b.f1 = 0.97;
  const std::vector<Metrics> two = {a, b};
  EXPECT_EQ(aggregate_folds(two).f1.render(), "0.960 ± 0.014");
  const std::vector<Metrics> same = {a, a, a};
  EXPECT_EQ(aggregate_folds(same).f1.render(), "0.950 ± 0.000");
  const std::vector<Metrics> one = {a};
  EXPECT_THROW(aggregate_folds(one), ConfigError);
}

TEST(Aggregate, MatchesIndependentRecomputation) {
  const std::vector<double> f1 = {0.91, 0.935, 0.948, 0.902, 0.97};
  std::vector<Metrics> folds(f1.size());
  for (std::size_t i = 0; i < f1.size(); ++i) folds[i].f1 = f1[i];
  // Sample standard deviation by the two-pass textbook formula.
  const double mean = (0.91 + 0.935 + 0.948 + 0.902 + 0.97) / 5;
  double ss = 0;
  for (double v : f1) ss += (v - mean) * (v - mean);
  const auto agg = aggregate_folds(folds);
  EXPECT_NEAR(agg.f1.mean, 0.933, 1e-12);
  EXPECT_NEAR(agg.f1.stddev, std::sqrt(ss / 4), 1e-12);
  const auto md = markdown_report("t", folds, agg);
  EXPECT_NE(md.find(agg.f1.render()), std::string::npos);
}

TEST(Synthetic, CorpusHasRequiredTopology) {
  SyntheticConfig sc;
  sc.flows = 2000;
  const auto t = generate_synthetic(sc);
  ASSERT_EQ(t.records.size(), 2000u);
  std::map<std::pair<std::int64_t, std::string>, std::pair<int, int>> fan_in;  // (slot, dst) → (attack, benign)
  for (std::size_t i = 1; i < t.records.size(); ++i) EXPECT_LE(t.records[i - 1].timestamp_us, t.records[i].timestamp_us);
  for (const auto& r : t.records) {
    const auto slot = (r.timestamp_us / 1'000'000 - sc.start_epoch_s) / static_cast<std::int64_t>(sc.slot_period_s);
    auto& c = fan_in[{slot, r.dst_ip}];
    (r.label == ingest::Label::Attack ? c.first : c.second)++;
  }
  for (const auto& [key, c] : fan_in) {
    if (c.first > 0) {
      EXPECT_GE(c.first, 20) << key.second;
      EXPECT_EQ(c.second, 0);
    } else {
      EXPECT_LE(c.second, 3) << key.second;
    }
  }
}

TEST(Synthetic, CsvParsesBackToSameTable) {
  SyntheticConfig sc;
  sc.flows = 300;
  const auto t = generate_synthetic(sc);
  testkit::TempDir dir("synth");
  write_synthetic_csv(dir / "s.csv", t);
  const auto back = ingest::parse_flow_file(dir / "s.csv", ingest::resolve_schema("synthetic")).table;
  EXPECT_EQ(back.feature_names, t.feature_names);
  EXPECT_EQ(back.records, t.records);
}

TEST(Trainer, ClassWeightsInverseFrequency) {
  nn::RngStream rng(62);
  auto g = testkit::random_graph(rng, {4, 8, 0, 4, 5});
  g.flow_labels = {1, 0, 0, 0, 0, 0, 1, 0};
  const auto w = class_weights({g});
  EXPECT_DOUBLE_EQ(w.attack, 8.0 / (2 * 2));
  EXPECT_DOUBLE_EQ(w.benign, 8.0 / (2 * 6));
}

TEST(Trainer, ZeroEpochsReturnsInitialModel) {
  const auto table = small_corpus(400);
  auto cfg = quick_experiment(0);
  const auto plan = make_folds(stratification_keys(table), cfg.folds, cfg.split_seed);
  const auto std_ = ingest::fit_standardizer(table);
  cfg.model.flow_dim = std_.output_width();
  const auto graphs = build_split_graphs(table, plan.folds[0].train, std_, cfg);
  const auto r = train_model(cfg.model, graphs, {}, cfg.train);
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_TRUE(r.history.empty());
  model::HGUNet fresh(cfg.model);
  model::HGUNet trained = r.model;
  EXPECT_EQ(nn::parameters_to_json(trained.parameters()), nn::parameters_to_json(fresh.parameters()));
}

TEST(Trainer, FixedSeedRepeatsExactly) {
  const auto table = small_corpus(500);
  const auto cfg = quick_experiment(3);
  const auto plan = make_folds(stratification_keys(table), cfg.folds, cfg.split_seed);
  const auto a = run_fold(table, plan, 1, cfg);
  const auto b = run_fold(table, plan, 1, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
  EXPECT_EQ(a.metrics, b.metrics);
}

TEST(Trainer, LearnsSeparableCorpus) {
  const auto table = small_corpus(1500);
  const auto cfg = quick_experiment(15);
  const auto plan = make_folds(stratification_keys(table), cfg.folds, cfg.split_seed);
  const auto out = run_fold(table, plan, 0, cfg);
  EXPECT_GE(out.metrics.f1, 0.9);
  EXPECT_EQ(metrics_from_predictions(out.predictions), out.metrics);
  EXPECT_EQ(out.predictions.size(), plan.folds[0].test.size());
}

TEST(Trainer, EvaluateNeedsLabels) {
  nn::RngStream rng(63);
  auto g = testkit::random_graph(rng, {4, 6, 0, 4, 5});
  g.flow_labels.assign(6, -1);
  EXPECT_THROW(evaluate(model::HGUNet(testkit::small_config(4, 5)), {g}), ConfigError);
}

TEST(Crossval, DeterministicAcrossThreadCounts) {
  const auto table = small_corpus(500);
  auto cfg = quick_experiment(2);
  cfg.folds = 3;
  const auto serial = run_crossval(table, cfg);
  cfg.threads = 3;
  const auto parallel = run_crossval(table, cfg);
  ASSERT_EQ(serial.folds.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(serial.folds[f].metrics, parallel.folds[f].metrics);
    EXPECT_EQ(serial.folds[f].test_size + serial.folds[f].train_size + serial.folds[f].validation_size, 500u);
  }
  ASSERT_TRUE(serial.aggregate);
  EXPECT_EQ(serial.aggregate->f1.render(), parallel.aggregate->f1.render());

  testkit::TempDir dir("cv");
  write_crossval_outputs(dir.path(), serial, "t");
  for (std::size_t f = 0; f < 3; ++f) {
    const auto d = dir / ("fold_" + std::to_string(f));
    const auto preds = read_prediction_dump(d / "predictions.jsonl");
    const auto stored = nlohmann::json::parse(testkit::read_file(d / "metrics.json")).get<Metrics>();
    EXPECT_EQ(metrics_from_predictions(preds), stored);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "report.md"));
  EXPECT_TRUE(std::filesystem::exists(dir / "aggregate.json"));
}

TEST(Bundle, RoundTripScoresIdentically) {
  const auto table = small_corpus(400);
  const auto cfg = quick_experiment(1);
  const auto plan = make_folds(stratification_keys(table), cfg.folds, cfg.split_seed);
  auto out = run_fold(table, plan, 0, cfg, true);
  ASSERT_TRUE(out.bundle);
  testkit::TempDir dir("bundle");
  save_bundle(*out.bundle, dir / "b.json");
  auto back = load_bundle(dir / "b.json");
  EXPECT_EQ(back.features, out.bundle->features);
  const auto graphs = build_split_graphs(table, plan.folds[0].test, back.standardizer, back.window, back.memory,
                                         back.build);
  EXPECT_EQ(evaluate(back.model, graphs).metrics, out.metrics);

  auto broken = bundle_to_json(*out.bundle);
  broken["model"]["config"]["flow_dim"] = 3;
  EXPECT_THROW(bundle_from_json(broken), Error);
}

TEST(Experiment, JsonRoundTrip) {
  const auto cfg = quick_experiment(4);
  const auto back = nlohmann::json(cfg).get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(cfg));
  auto bad = cfg;
  bad.folds = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
}
