#include "hgunet/service/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "hgunet/error.hpp"
#include "hgunet/graph/builder.hpp"
#include "hgunet/graph/graph_json.hpp"
#include "hgunet/ingest/export.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/model/hgunet.hpp"
#include "hgunet/service/forensic_log.hpp"
#include "hgunet/service/sha256.hpp"
#include "hgunet/train/bundle.hpp"

namespace hgunet::service {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

nlohmann::ordered_json flow_metadata(const ingest::FlowRecord& r) {
  nlohmann::ordered_json j;
  j["flow_id"] = r.flow_id;
  j["src_ip"] = r.src_ip;
  j["dst_ip"] = r.dst_ip;
  j["src_port"] = r.src_port;
  j["dst_port"] = r.dst_port;
  j["protocol"] = r.protocol;
  j["timestamp"] = r.timestamp_us;
  return j;
}

class Replay {
 public:
  Replay(const ServiceConfig& cfg, const RunOptions& opts, train::DetectorBundle& bundle, std::string version)
      : cfg_(cfg),
        opts_(opts),
        bundle_(bundle),
        scratch_(bundle.model),
        memory_(cfg.memory.value_or(bundle.memory)),
        forensic_(opts.out_dir / "forensic.jsonl", header(version, cfg, bundle)),
        predictions_(open_out(opts.out_dir / "predictions.jsonl")),
        verdicts_(open_out(opts.out_dir / "verdicts.jsonl")),
        alerts_(open_out(opts.out_dir / "alerts.jsonl")),
        flows_(open_out(opts.out_dir / "flows.jsonl")) {
    summary_.model_version = std::move(version);
    summary_.thresholds = cfg.thresholds;
    for (Action a : {Action::Block, Action::RateLimit, Action::Alert, Action::None}) summary_.tiers[std::string(to_string(a))] = 0;
  }

  void process(const graph::Batch& raw_batch, const std::vector<std::string>& all_names,
               const std::vector<std::size_t>& original_rows, const std::vector<ingest::FlowRecord>& originals) {
    auto t0 = Clock::now();
    graph::Batch batch = raw_batch;
    for (auto& r : batch.records) r = ingest::apply_standardizer(r, bundle_.standardizer);
    const graph::HeteroGraph g = graph::build_graph(batch, memory_, bundle_.build);
    build_ms_.push_back(ms_since(t0));

    t0 = Clock::now();
    model::ForwardOptions fwd;
    fwd.keep_trace = true;
    const auto result = bundle_.model.forward(g, fwd);
    inference_ms_.push_back(ms_since(t0));

    t0 = Clock::now();
    WindowReport report{batch.window_id, result.flow_rows.size(), 0};
    // In-window flow rows follow batch order, so row i ↔ batch record i.
    for (std::size_t i = 0; i < result.flow_rows.size(); ++i) {
      const auto& rec = raw_batch.records[i];
      const double p = result.probabilities[i];
      const Verdict v = make_verdict(rec.flow_id, p, cfg_.thresholds, batch.end_us);
      ++summary_.tiers[std::string(to_string(v.action))];

      nlohmann::ordered_json body;
      body["type"] = "flow";
      const auto meta = flow_metadata(rec);
      for (const auto& [k, val] : meta.items()) body[k] = val;
      body["p"] = p;
      body["model_version"] = summary_.model_version;
      body["window_id"] = batch.window_id;
      body["verdict"] = verdict_to_json(v);
      forensic_.append(std::move(body));

      nlohmann::ordered_json pred{{"flow_id", rec.flow_id}, {"p", p}, {"label", ingest::binary_target(rec.label)}};
      predictions_ << pred.dump() << '\n';
      auto vj = verdict_to_json(v);
      vj["window_id"] = batch.window_id;
      verdicts_ << vj.dump() << '\n';

      if (v.analyst_alert) {
        Alert a;
        a.seq = next_alert_++;
        a.id = "a" + std::to_string(a.seq);
        a.window_id = batch.window_id;
        a.flow = flow_metadata(rec);
        a.p = p;
        a.action = std::string(to_string(v.action));
        a.issued_at_us = v.issued_at_us;
        const auto contributions = model::saliency(scratch_, g, result, i, bundle_.standardizer.output_names,
                                                   cfg_.top_features);
        for (const auto& c : contributions) a.top_features.push_back({{"name", c.name}, {"contribution", c.value}});
        a.subgraph = graph::flow_subgraph_json(g, result.flow_rows[i], cfg_.subgraph);
        alerts_ << alert_to_json(a).dump() << '\n';
        flows_ << ingest::record_to_json(originals[original_rows[i]], all_names).dump() << '\n';
        if (opts_.live_store) opts_.live_store->add(std::move(a));
        ++summary_.grey_zone_alerts;
        ++report.grey_zone_alerts;
      }
    }
    summary_.flows_scored += result.flow_rows.size();
    ++summary_.windows;
    graph::update_memory(memory_, batch);
    for (auto* s : {&predictions_, &verdicts_, &alerts_, &flows_}) s->flush();
    forensic_.flush();
    decision_ms_.push_back(ms_since(t0));
    if (opts_.on_window) opts_.on_window(report);
  }

  RunSummary finish() {
    summary_.stages["graph_build"] = latency_summary(build_ms_);
    summary_.stages["inference"] = latency_summary(inference_ms_);
    summary_.stages["decision"] = latency_summary(decision_ms_);
    return summary_;
  }

  RunSummary& summary() { return summary_; }

 private:
  static nlohmann::ordered_json header(const std::string& version, const ServiceConfig& cfg,
                                       const train::DetectorBundle& bundle) {
    nlohmann::ordered_json h;
    h["model_version"] = version;
    h["schema"] = cfg.schema.value_or(bundle.schema);
    h["thresholds"] = nlohmann::json(cfg.thresholds);
    return h;
  }

  const ServiceConfig& cfg_;
  const RunOptions& opts_;
  train::DetectorBundle& bundle_;
  model::HGUNet scratch_;
  graph::SlidingWindowMemory memory_;
  ForensicLog forensic_;
  std::ofstream predictions_, verdicts_, alerts_, flows_;
  RunSummary summary_;
  std::uint64_t next_alert_ = 0;
  std::vector<double> build_ms_, inference_ms_, decision_ms_;
};

}  // namespace

StageLatency latency_summary(std::vector<double> samples) {
  StageLatency s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(k, 1, samples.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  s.p99_ms = rank(0.99);
  s.max_ms = samples.back();
  return s;
}

nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& [name, l] : s.stages) {
    stages[name] = {{"samples", l.samples}, {"p50_ms", l.p50_ms}, {"p95_ms", l.p95_ms}, {"p99_ms", l.p99_ms},
                    {"max_ms", l.max_ms}};
  }
  return {{"model_version", s.model_version},
          {"parse",
           {{"total_rows", s.parse.total_rows},
            {"emitted", s.parse.emitted},
            {"skipped_malformed", s.parse.skipped_malformed},
            {"skipped_label_policy", s.parse.skipped_label_policy},
            {"suppressed_duplicates", s.parse.suppressed_duplicates},
            {"inf_replaced", s.parse.inf_replaced},
            {"nan_replaced", s.parse.nan_replaced}}},
          {"windows", s.windows},
          {"flows_scored", s.flows_scored},
          {"tiers", s.tiers},
          {"grey_zone_alerts", s.grey_zone_alerts},
          {"out_of_order", s.out_of_order},
          {"wall_seconds", s.wall_seconds},
          {"throughput_fps", s.throughput_fps},
          {"ingest_ms", s.ingest_ms},
          {"stages", stages},
          {"thresholds", s.thresholds}};
}

std::string model_version(const std::filesystem::path& checkpoint) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + checkpoint.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str()).substr(0, 16);
}

RunSummary run_pipeline(const ServiceConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto wall0 = Clock::now();
  train::DetectorBundle bundle = train::load_bundle(cfg.model_path);
  const auto schema = ingest::resolve_schema(cfg.schema.value_or(bundle.schema));
  const auto names = schema.canonical_names();
  for (const auto& f : bundle.features) {
    if (std::find(names.begin(), names.end(), f) == names.end()) {
      throw ConfigError("checkpoint feature '" + f + "' is not provided by schema " + schema.name);
    }
  }
  const graph::WindowConfig window = cfg.window.value_or(bundle.window);
  std::filesystem::create_directories(opts.out_dir);

  auto t0 = Clock::now();
  ingest::ParseResult parsed;
  if (std::filesystem::file_size(opts.input) > 0) {
    ingest::ParseOptions popts;
    popts.label_policy = bundle.label_policy;
    parsed = ingest::parse_flow_file(opts.input, schema, popts);
  }
  const double ingest_ms = ms_since(t0);

  Replay replay(cfg, opts, bundle, model_version(cfg.model_path));
  replay.summary().parse = parsed.stats;
  replay.summary().ingest_ms = ingest_ms;

  const auto& all = parsed.table.records;
  const auto& all_names = parsed.table.feature_names;
  std::vector<std::size_t> rows;  // original row per record in the open batch
  graph::Windower windower(window);
  const auto handle = [&](const graph::Batch& b) {
    std::vector<std::size_t> batch_rows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(b.records.size()));
    rows.erase(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(b.records.size()));
    replay.process(b, all_names, batch_rows, all);
  };

  const auto replay_start = Clock::now();
  const std::int64_t first_ts = all.empty() ? 0 : all.front().timestamp_us;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (cfg.speed > 0.0) {
      const double offset_s = static_cast<double>(all[i].timestamp_us - first_ts) / 1e6 / cfg.speed;
      std::this_thread::sleep_until(replay_start + std::chrono::duration_cast<Clock::duration>(
                                                       std::chrono::duration<double>(std::max(0.0, offset_s))));
    }
    rows.push_back(i);
    for (const auto& b : windower.push(ingest::select_features(all[i], all_names, bundle.features))) handle(b);
  }
  if (auto last = windower.flush()) handle(*last);

  RunSummary summary = replay.finish();
  summary.out_of_order = windower.out_of_order();
  summary.wall_seconds = std::chrono::duration<double>(Clock::now() - wall0).count();
  summary.throughput_fps = summary.wall_seconds > 0 ? static_cast<double>(summary.flows_scored) / summary.wall_seconds : 0.0;
  const auto sj = summary_to_json(summary);
  std::ofstream(opts.out_dir / "summary.json") << sj.dump(2) << '\n';
  if (opts.live_store) opts.live_store->set_summary(sj);
  return summary;
}

}  // namespace hgunet::service
