#include "hgunet/train/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hgunet/error.hpp"

namespace hgunet::train {

void Confusion::add(int label, bool predicted_attack) {
  if (label == 1) {
    ++(predicted_attack ? tp : fn);
  } else {
    ++(predicted_attack ? fp : tn);
  }
}

Metrics compute_metrics(const Confusion& c) {
  const auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.confusion = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics metrics_from_predictions(std::span<const Prediction> predictions, double threshold) {
  Confusion c;
  for (const auto& p : predictions) {
    if (p.label >= 0) c.add(p.label, p.p >= threshold);
  }
  return compute_metrics(c);
}

void write_prediction_dump(std::ostream& out, std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json j{{"flow_id", p.flow_id}, {"p", p.p}, {"label", p.label}};
    out << j.dump() << '\n';
  }
}

void write_prediction_dump(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_prediction_dump(out, predictions);
}

std::vector<Prediction> read_prediction_dump(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("flow_id").get<std::string>(), j.at("p").get<double>(), j.at("label").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("prediction dump line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> read_prediction_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_prediction_dump(in);
}

std::string MetricSummary::render() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", mean, stddev);
  return buf;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

AggregateReport aggregate_folds(std::span<const Metrics> folds) {
  if (folds.size() < 2) throw ConfigError("aggregate_folds: need at least two folds");
  std::vector<double> acc, prec, rec, f1;
  for (const auto& m : folds) {
    acc.push_back(m.accuracy);
    prec.push_back(m.precision);
    rec.push_back(m.recall);
    f1.push_back(m.f1);
  }
  return {folds.size(), summarize(acc), summarize(prec), summarize(rec), summarize(f1)};
}

std::string markdown_report(const std::string& title, std::span<const Metrics> folds, const AggregateReport& agg) {
  std::ostringstream out;
  char buf[160];
  out << "## " << title << "\n\n";
  out << "| Fold | Accuracy | Precision | Recall | F1 | TP | FP | TN | FN |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < folds.size(); ++i) {
    const auto& m = folds[i];
    std::snprintf(buf, sizeof buf, "| %zu | %.3f | %.3f | %.3f | %.3f | %llu | %llu | %llu | %llu |\n", i, m.accuracy,
                  m.precision, m.recall, m.f1, static_cast<unsigned long long>(m.confusion.tp),
                  static_cast<unsigned long long>(m.confusion.fp), static_cast<unsigned long long>(m.confusion.tn),
                  static_cast<unsigned long long>(m.confusion.fn));
    out << buf;
  }
  out << "| **mean ± std** | " << agg.accuracy.render() << " | " << agg.precision.render() << " | "
      << agg.recall.render() << " | " << agg.f1.render() << " | | | | |\n";
  return out.str();
}

void to_json(nlohmann::json& j, const Confusion& c) { j = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}; }

void from_json(const nlohmann::json& j, Confusion& c) {
  c.tp = j.at("tp");
  c.fp = j.at("fp");
  c.tn = j.at("tn");
  c.fn = j.at("fn");
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
       {"confusion", m.confusion}};
}

void from_json(const nlohmann::json& j, Metrics& m) {
  m.accuracy = j.at("accuracy");
  m.precision = j.at("precision");
  m.recall = j.at("recall");
  m.f1 = j.at("f1");
  m.confusion = j.at("confusion").get<Confusion>();
}

void to_json(nlohmann::json& j, const AggregateReport& r) {
  const auto s = [](const MetricSummary& m) {
    return nlohmann::json{{"mean", m.mean}, {"std", m.stddev}, {"rendered", m.render()}};
  };
  j = {{"folds", r.folds}, {"accuracy", s(r.accuracy)}, {"precision", s(r.precision)},
       {"recall", s(r.recall)}, {"f1", s(r.f1)}};
}

}  // namespace hgunet::train
