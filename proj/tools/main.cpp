// hgunet: train, evaluate and run the heterogeneous graph U-Net DDoS detector.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hgunet/error.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/service/api_server.hpp"
#include "hgunet/service/feedback_export.hpp"
#include "hgunet/service/forensic_log.hpp"
#include "hgunet/service/pipeline.hpp"
#include "hgunet/train/crossval.hpp"
#include "hgunet/train/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hgunet;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

void serve_until_interrupted(service::ApiServer& server) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void log_epoch(std::size_t fold, const train::EpochRecord& e) {
  std::cerr << "fold " << fold << " epoch " << e.epoch << " loss " << e.train_loss << " val_f1 " << e.val_f1
            << (e.improved ? " *" : "") << '\n';
}

struct TrainArgs {
  std::string data, config, out = "runs/train", fold = "0", schema;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, subsample;
};

train::ExperimentConfig experiment_from(const std::string& config_path, const std::string& schema,
                                        std::optional<std::uint64_t> seed, std::optional<std::size_t> epochs,
                                        std::optional<std::size_t> subsample) {
  train::ExperimentConfig cfg = config_path.empty() ? train::ExperimentConfig{} : train::load_experiment(config_path);
  if (!schema.empty()) cfg.schema = schema;
  if (seed) {
    cfg.split_seed = *seed;
    cfg.train.seed = *seed;
  }
  if (epochs) cfg.train.epochs = *epochs;
  if (subsample) cfg.subsample = *subsample;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const auto cfg = experiment_from(a.config, a.schema, a.seed, a.epochs, a.subsample);
  const auto table = train::load_dataset(a.data, cfg);
  const auto plan = train::make_folds(train::stratification_keys(table), cfg.folds, cfg.split_seed,
                                      cfg.validation_fraction);
  std::vector<std::size_t> folds;
  if (a.fold == "all") {
    folds.resize(plan.k);
    std::iota(folds.begin(), folds.end(), 0);
  } else {
    folds.push_back(std::stoul(a.fold));
  }
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "experiment.json", cfg);
  std::vector<train::Metrics> metrics;
  for (std::size_t f : folds) {
    auto outcome = train::run_fold(table, plan, f, cfg, true,
                                   [f](const train::EpochRecord& e) { log_epoch(f, e); });
    const fs::path dir = fs::path(a.out) / ("fold_" + std::to_string(f));
    fs::create_directories(dir);
    train::save_bundle(*outcome.bundle, dir / "bundle.json");
    nlohmann::json m = outcome.metrics;
    m["fold"] = f;
    m["best_epoch"] = outcome.best_epoch;
    write_json(dir / "metrics.json", m);
    write_json(dir / "history.json", outcome.history);
    train::write_prediction_dump(dir / "predictions.jsonl", outcome.predictions);
    std::cout << "fold " << f << ": " << m.dump() << '\n';
    metrics.push_back(outcome.metrics);
  }
  if (metrics.size() >= 2) {
    const auto agg = train::aggregate_folds(metrics);
    write_json(fs::path(a.out) / "aggregate.json", agg);
    std::ofstream(fs::path(a.out) / "report.md") << train::markdown_report("Cross-validation", metrics, agg);
  }
  return 0;
}

int cmd_crossval(const TrainArgs& a, std::optional<std::size_t> threads, std::optional<std::size_t> k) {
  auto cfg = experiment_from(a.config, a.schema, a.seed, a.epochs, a.subsample);
  if (threads) cfg.threads = *threads;
  if (k) cfg.folds = *k;
  cfg.validate();
  const auto table = train::load_dataset(a.data, cfg);
  std::cerr << "crossval: " << table.records.size() << " flows, " << cfg.folds << " folds\n";
  const auto report = train::run_crossval(table, cfg, {}, log_epoch);
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "experiment.json", cfg);
  train::write_crossval_outputs(a.out, report, "Cross-validation (" + cfg.schema + ")");
  if (report.aggregate) {
    std::cout << "F1 " << report.aggregate->f1.render() << "  precision " << report.aggregate->precision.render()
              << "  recall " << report.aggregate->recall.render() << "  accuracy "
              << report.aggregate->accuracy.render() << '\n';
  }
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data, std::optional<std::size_t> fold,
                 const std::string& predictions_out) {
  auto bundle = train::load_bundle(model_path);
  train::ExperimentConfig cfg;
  cfg.schema = bundle.schema;
  cfg.label_policy = bundle.label_policy;
  cfg.features = bundle.features;
  // A fold's test split is only reproducible on the same subsample.
  if (fold) {
    cfg.split_seed = bundle.provenance.value("split_seed", std::uint64_t{0});
    cfg.subsample = bundle.provenance.value("subsample", std::size_t{0});
  }
  const auto table = train::load_dataset(data, cfg);
  std::vector<std::size_t> rows;
  if (fold) {
    const auto k = bundle.provenance.value("folds", std::size_t{10});
    const auto vf = bundle.provenance.value("validation_fraction", 0.2);
    const auto plan = train::make_folds(train::stratification_keys(table), k, cfg.split_seed, vf);
    if (*fold >= plan.k) throw ConfigError("fold " + std::to_string(*fold) + " outside the plan");
    rows = plan.folds[*fold].test;
  } else {
    rows.resize(table.records.size());
    std::iota(rows.begin(), rows.end(), 0);
  }
  const auto graphs = train::build_split_graphs(table, rows, bundle.standardizer, bundle.window, bundle.memory,
                                                bundle.build);
  const auto result = train::evaluate(bundle.model, graphs);
  if (!predictions_out.empty()) train::write_prediction_dump(predictions_out, result.predictions);
  std::cout << nlohmann::json(result.metrics).dump(2) << '\n';
  return 0;
}

int serve_store(service::AlertStore& store, const std::string& listen) {
  const auto [host, port] = service::parse_listen(listen);
  service::ApiServer server(store);
  const int bound = server.bind(host, port);
  std::cerr << "serving /v1 on " << host << ":" << bound << '\n';
  server.start();
  serve_until_interrupted(server);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous graph U-Net DDoS detector"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train on one fold (or all) and write detector bundles");
  train_cmd->add_option("--data", targs.data, "Flow CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", targs.config, "Experiment JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--schema", targs.schema, "Schema name or path (overrides config)");
  train_cmd->add_option("--fold", targs.fold, "Fold index or 'all'");
  train_cmd->add_option("--seed", targs.seed, "Seed for splits and training");
  train_cmd->add_option("--epochs", targs.epochs, "Epoch budget");
  train_cmd->add_option("--subsample", targs.subsample, "Stratified subsample size");
  train_cmd->add_option("--out", targs.out, "Output directory");

  TrainArgs cargs;
  std::optional<std::size_t> threads, k;
  auto* cv_cmd = app.add_subcommand("crossval", "Full k-fold protocol with aggregate report");
  cv_cmd->add_option("--data", cargs.data, "Flow CSV")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--config", cargs.config, "Experiment JSON")->check(CLI::ExistingFile);
  cv_cmd->add_option("--schema", cargs.schema, "Schema name or path");
  cv_cmd->add_option("--folds", k, "Fold count (overrides config)");
  cv_cmd->add_option("--threads", threads, "Folds run concurrently");
  cv_cmd->add_option("--seed", cargs.seed, "Seed for splits and training");
  cv_cmd->add_option("--epochs", cargs.epochs, "Epoch budget");
  cv_cmd->add_option("--subsample", cargs.subsample, "Stratified subsample size");
  cv_cmd->add_option("--out", cargs.out, "Output directory")->required();

  std::string eval_model, eval_data, eval_preds;
  std::optional<std::size_t> eval_fold;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a dataset (or one fold's test split) with a bundle");
  eval_cmd->add_option("--model", eval_model, "Detector bundle")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "Flow CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--fold", eval_fold, "Evaluate only this fold's test split");
  eval_cmd->add_option("--predictions", eval_preds, "Write the per-flow prediction dump here");

  std::string replay_input, replay_config, replay_model, replay_out = "runs/replay", replay_listen;
  std::optional<double> delta_t, tau_analyst, tau_auto, speed;
  std::optional<std::size_t> max_flows;
  bool replay_serve = false;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a flow log through the detector");
  replay_cmd->add_option("--input", replay_input, "Flow CSV")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--config", replay_config, "Service JSON")->check(CLI::ExistingFile);
  replay_cmd->add_option("--model", replay_model, "Detector bundle (overrides config)");
  replay_cmd->add_option("--delta-t", delta_t, "Window span in seconds");
  replay_cmd->add_option("--max-flows", max_flows, "Window size cap B");
  replay_cmd->add_option("--tau-analyst", tau_analyst, "Grey-zone lower bound");
  replay_cmd->add_option("--tau-auto", tau_auto, "Automatic block threshold");
  replay_cmd->add_option("--speed", speed, "Replay multiplier (0 = unpaced)");
  replay_cmd->add_option("--out", replay_out, "Run directory");
  replay_cmd->add_flag("--serve", replay_serve, "Keep serving the API after the replay");
  replay_cmd->add_option("--listen", replay_listen, "host:port for --serve");

  std::string serve_state, serve_listen = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the analyst API for a finished run");
  serve_cmd->add_option("--state", serve_state, "Run directory")->required()->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--listen", serve_listen, "host:port");

  std::string verify_path;
  auto* verify_cmd = app.add_subcommand("verify-log", "Verify a forensic log's hash chain");
  verify_cmd->add_option("path", verify_path, "forensic.jsonl")->required()->check(CLI::ExistingFile);

  std::string export_run, export_out;
  auto* export_cmd = app.add_subcommand("export-feedback", "Export analyst verdicts as labeled records");
  export_cmd->add_option("run", export_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--out", export_out, "Output JSONL (default <run>/feedback_export.jsonl)");

  train::SyntheticConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic flow corpus");
  synth_cmd->add_option("--flows", synth.flows, "Flow count");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--separation", synth.separation, "Attack feature shift in std units");
  synth_cmd->add_option("--out", synth_out, "CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(targs);
    if (*cv_cmd) return cmd_crossval(cargs, threads, k);
    if (*eval_cmd) return cmd_evaluate(eval_model, eval_data, eval_fold, eval_preds);
    if (*replay_cmd) {
      service::ServiceConfig cfg = replay_config.empty() ? service::ServiceConfig{} : service::load_service_config(replay_config);
      if (!replay_model.empty()) cfg.model_path = replay_model;
      if (cfg.model_path.empty()) throw ConfigError("replay needs --model or a config naming one");
      if (delta_t || max_flows) {
        graph::WindowConfig w = cfg.window.value_or(train::load_bundle(cfg.model_path).window);
        if (delta_t) w.delta_t_s = *delta_t;
        if (max_flows) w.max_flows = *max_flows;
        cfg.window = w;
      }
      if (tau_analyst) cfg.thresholds.tau_analyst = *tau_analyst;
      if (tau_auto) cfg.thresholds.tau_auto = *tau_auto;
      if (speed) cfg.speed = *speed;
      if (!replay_listen.empty()) cfg.listen = replay_listen;
      cfg.validate();

      service::AlertStore store;
      fs::create_directories(replay_out);
      store.attach_feedback_log(fs::path(replay_out) / "feedback.jsonl");
      std::unique_ptr<service::ApiServer> live;
      if (replay_serve) {
        const auto [host, port] = service::parse_listen(cfg.listen);
        live = std::make_unique<service::ApiServer>(store);
        std::cerr << "serving /v1 on " << host << ":" << live->bind(host, port) << " during replay\n";
        live->start();
      }
      service::RunOptions opts{replay_input, replay_out, &store, {}};
      const auto summary = service::run_pipeline(cfg, opts);
      std::cout << service::summary_to_json(summary).dump(2) << '\n';
      if (live) {
        std::cerr << "replay finished; serving until interrupted\n";
        serve_until_interrupted(*live);
      }
      return 0;
    }
    if (*serve_cmd) {
      service::AlertStore store;
      service::AlertStore::load_run(store, serve_state);
      store.attach_feedback_log(fs::path(serve_state) / "feedback.jsonl");
      return serve_store(store, serve_listen);
    }
    if (*verify_cmd) {
      const auto v = service::verify_forensic_log(verify_path);
      if (v.ok) {
        std::cout << "ok: " << v.records << " records verified\n";
        return 0;
      }
      std::cout << "corrupt at seq " << *v.first_corrupt << ": " << v.reason << '\n';
      return 1;
    }
    if (*export_cmd) {
      const fs::path out = export_out.empty() ? fs::path(export_run) / "feedback_export.jsonl" : fs::path(export_out);
      const auto stats = service::export_feedback(export_run, out);
      std::cout << "exported " << stats.exported << ", excluded (rate_limit) " << stats.excluded_rate_limit
                << ", skipped (missing original) " << stats.skipped_missing << " -> " << out.string() << '\n';
      return 0;
    }
    if (*synth_cmd) {
      const auto table = train::generate_synthetic(synth);
      train::write_synthetic_csv(synth_out, table);
      std::cout << "wrote " << table.records.size() << " flows to " << synth_out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
