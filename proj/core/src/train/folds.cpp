#include "hgunet/train/folds.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hgunet/error.hpp"
#include "hgunet/numeric/rng.hpp"

namespace hgunet::train {

namespace {

std::map<int, std::vector<std::size_t>> by_class(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

// Split `total` across groups proportionally to `sizes`, floors first, then
// the largest fractional parts (ties to the earlier group).
std::vector<std::size_t> largest_remainder(const std::vector<std::size_t>& sizes, std::size_t total) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::vector<std::size_t> out(sizes.size(), 0);
  if (n == 0) return out;
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[c]) / static_cast<double>(n);
    out[c] = std::min(sizes[c], static_cast<std::size_t>(std::floor(exact)));
    assigned += out[c];
    frac.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < frac.size(); ++i) {
    const std::size_t c = frac[i].second;
    if (out[c] < sizes[c]) {
      ++out[c];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

void FoldPlan::validate() const {
  std::vector<int> in_test(item_count, 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<int> seen(item_count, 0);
    for (const auto* part : {&folds[f].train, &folds[f].validation, &folds[f].test}) {
      for (std::size_t i : *part) {
        if (i >= item_count) throw ConsistencyError("fold plan: index out of range");
        if (seen[i]++) throw ConsistencyError("fold plan: index " + std::to_string(i) + " used twice in fold " + std::to_string(f));
      }
    }
    for (std::size_t i = 0; i < item_count; ++i) {
      if (!seen[i]) throw ConsistencyError("fold plan: index " + std::to_string(i) + " missing from fold " + std::to_string(f));
    }
    for (std::size_t i : folds[f].test) ++in_test[i];
  }
  for (std::size_t i = 0; i < item_count; ++i) {
    if (in_test[i] != 1) throw ConsistencyError("fold plan: test folds do not partition the items");
  }
}

FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed, double validation_fraction) {
  if (k < 2) throw ConfigError("make_folds: k must be at least 2");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("make_folds: validation fraction outside [0,1)");
  }
  auto groups = by_class(labels);
  for (const auto& [label, members] : groups) {
    if (members.size() < k) {
      throw ConfigError("make_folds: class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " members, fewer than k=" + std::to_string(k));
    }
  }

  nn::RngStream rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::vector<std::vector<std::size_t>> shuffled;
  std::size_t counter = 0;  // carries across classes so fold sizes stay within one
  for (auto& [label, members] : groups) {
    std::vector<std::size_t> order = members;
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) fold_of[i] = counter++ % k;
    shuffled.push_back(std::move(order));
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.validation_fraction = validation_fraction;
  plan.item_count = labels.size();
  for (std::size_t f = 0; f < k; ++f) {
    nn::RngStream fold_rng = rng.fork(f);
    Fold fold;
    std::vector<std::vector<std::size_t>> rest(shuffled.size());
    std::vector<std::size_t> sizes;
    std::size_t rest_total = 0;
    for (std::size_t c = 0; c < shuffled.size(); ++c) {
      for (std::size_t i : shuffled[c]) (fold_of[i] == f ? fold.test : rest[c]).push_back(i);
      fold_rng.shuffle(std::span<std::size_t>(rest[c]));
      sizes.push_back(rest[c].size());
      rest_total += rest[c].size();
    }
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(rest_total)));
    const auto quota = largest_remainder(sizes, n_val);
    for (std::size_t c = 0; c < rest.size(); ++c) {
      for (std::size_t j = 0; j < rest[c].size(); ++j) (j < quota[c] ? fold.validation : fold.train).push_back(rest[c][j]);
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (n >= labels.size()) {
    out.resize(labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }
  auto groups = by_class(labels);
  std::vector<std::size_t> sizes;
  for (const auto& [label, members] : groups) sizes.push_back(members.size());
  const auto quota = largest_remainder(sizes, n);
  nn::RngStream rng(seed);
  std::size_t c = 0;
  for (auto& [label, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c++]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void to_json(nlohmann::json& j, const Fold& f) {
  j = {{"train", f.train}, {"validation", f.validation}, {"test", f.test}};
}

void to_json(nlohmann::json& j, const FoldPlan& p) {
  j = {{"k", p.k}, {"seed", p.seed}, {"validation_fraction", p.validation_fraction},
       {"item_count", p.item_count}, {"folds", p.folds}};
}

}  // namespace hgunet::train
