#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::ingest {

/// Per-feature z-score fitted on training records only. Features with zero
/// training variance are dropped and listed in `dropped`.
struct Standardizer {
  std::vector<std::string> input_names;   // feature order the fit saw
  std::vector<std::size_t> kept;          // indices into input_names
  std::vector<std::string> output_names;  // input_names[kept[i]]
  std::vector<double> mean;               // per kept feature
  std::vector<double> stddev;             // per kept feature, > 0
  std::vector<std::string> dropped;

  std::vector<double> transform(const std::vector<double>& features) const;
  std::size_t output_width() const { return kept.size(); }
};

Standardizer fit_standardizer(const FlowTable& train);
Standardizer fit_standardizer(const std::vector<std::string>& names,
                              const std::vector<const FlowRecord*>& train);
FlowRecord apply_standardizer(const FlowRecord& record, const Standardizer& s);
FlowTable apply_standardizer(const FlowTable& table, const Standardizer& s);

void to_json(nlohmann::json& j, const Standardizer& s);
void from_json(const nlohmann::json& j, Standardizer& s);

}  // namespace hgunet::ingest
