#include "hgunet/ingest/standardizer.hpp"

#include <cmath>

#include "hgunet/error.hpp"

namespace hgunet::ingest {

Standardizer fit_standardizer(const std::vector<std::string>& names,
                              const std::vector<const FlowRecord*>& train) {
  if (train.size() < 2) {
    throw ConfigError("standardizer needs at least 2 training records, got " +
                      std::to_string(train.size()));
  }
  const std::size_t w = names.size();
  std::vector<double> mean(w, 0.0), var(w, 0.0);
  for (const FlowRecord* r : train) {
    if (r->features.size() != w) throw DimensionError("standardizer: ragged feature vectors");
    for (std::size_t f = 0; f < w; ++f) mean[f] += r->features[f];
  }
  const double n = static_cast<double>(train.size());
  for (double& m : mean) m /= n;
  for (const FlowRecord* r : train) {
    for (std::size_t f = 0; f < w; ++f) {
      const double d = r->features[f] - mean[f];
      var[f] += d * d;
    }
  }
  Standardizer s;
  s.input_names = names;
  for (std::size_t f = 0; f < w; ++f) {
    const double sd = std::sqrt(var[f] / n);
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      s.dropped.push_back(names[f]);
      continue;
    }
    s.kept.push_back(f);
    s.output_names.push_back(names[f]);
    s.mean.push_back(mean[f]);
    s.stddev.push_back(sd);
  }
  return s;
}

Standardizer fit_standardizer(const FlowTable& train) {
  std::vector<const FlowRecord*> ptrs;
  ptrs.reserve(train.records.size());
  for (const auto& r : train.records) ptrs.push_back(&r);
  return fit_standardizer(train.feature_names, ptrs);
}

std::vector<double> Standardizer::transform(const std::vector<double>& features) const {
  if (features.size() != input_names.size()) {
    throw DimensionError("standardizer expects " + std::to_string(input_names.size()) +
                         " features, got " + std::to_string(features.size()));
  }
  std::vector<double> out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out[i] = (features[kept[i]] - mean[i]) / stddev[i];
  }
  return out;
}

FlowRecord apply_standardizer(const FlowRecord& record, const Standardizer& s) {
  FlowRecord out = record;
  out.features = s.transform(record.features);
  return out;
}

FlowTable apply_standardizer(const FlowTable& table, const Standardizer& s) {
  if (table.feature_names != s.input_names) {
    throw ConfigError("standardizer was fitted on a different feature list");
  }
  FlowTable out;
  out.feature_names = s.output_names;
  out.records.reserve(table.records.size());
  for (const auto& r : table.records) out.records.push_back(apply_standardizer(r, s));
  return out;
}

void to_json(nlohmann::json& j, const Standardizer& s) {
  j = {{"input_names", s.input_names}, {"kept", s.kept},       {"output_names", s.output_names},
       {"mean", s.mean},               {"stddev", s.stddev},   {"dropped", s.dropped}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
  j.at("input_names").get_to(s.input_names);
  j.at("kept").get_to(s.kept);
  j.at("output_names").get_to(s.output_names);
  j.at("mean").get_to(s.mean);
  j.at("stddev").get_to(s.stddev);
  j.at("dropped").get_to(s.dropped);
  if (s.kept.size() != s.mean.size() || s.kept.size() != s.stddev.size() ||
      s.kept.size() != s.output_names.size()) {
    throw ConfigError("standardizer record is inconsistent");
  }
}

}  // namespace hgunet::ingest
