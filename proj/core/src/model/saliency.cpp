#include <algorithm>
#include <cmath>

#include "hgunet/error.hpp"
#include "hgunet/model/hgunet.hpp"

namespace hgunet::model {

std::vector<FeatureContribution> saliency(HGUNet& scratch, const graph::HeteroGraph& g,
                                          const ForwardResult& result, std::size_t position,
                                          std::span<const std::string> feature_names, std::size_t top_m) {
  if (position >= result.flow_rows.size()) throw LookupError("saliency: flow position out of range");
  if (feature_names.size() != g.flow_features.cols()) {
    throw DimensionError("saliency: " + std::to_string(feature_names.size()) + " names for " +
                         std::to_string(g.flow_features.cols()) + " features");
  }
  std::vector<double> seed(result.logits.size(), 0.0);
  seed[position] = 1.0;
  scratch.zero_grad();
  const InputGrads grads = scratch.backward(result, seed);

  const std::size_t row = result.flow_rows[position];
  std::vector<FeatureContribution> out;
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    out.push_back({feature_names[f], f, grads.flow(row, f) * g.flow_features(row, f)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const double x = std::abs(a.value), y = std::abs(b.value);
    if (x != y) return x > y;
    return a.index < b.index;
  });
  if (top_m > 0 && out.size() > top_m) out.resize(top_m);
  return out;
}

std::vector<FeatureContribution> saliency(const HGUNet& model, const graph::HeteroGraph& g,
                                          std::string_view flow_id, std::span<const std::string> feature_names,
                                          std::size_t top_m) {
  HGUNet scratch = model;
  ForwardOptions opts;
  opts.keep_trace = true;
  const ForwardResult result = scratch.forward(g, opts);
  for (std::size_t i = 0; i < result.flow_rows.size(); ++i) {
    if (g.flow_ids[result.flow_rows[i]] == flow_id) {
      return saliency(scratch, g, result, i, feature_names, top_m);
    }
  }
  throw LookupError("saliency: no in-window flow with id '" + std::string(flow_id) + "'");
}

}  // namespace hgunet::model
