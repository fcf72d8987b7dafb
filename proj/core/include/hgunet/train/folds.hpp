#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace hgunet::train {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  std::size_t item_count = 0;
  std::vector<Fold> folds;

  /// Test folds partition [0, item_count) and the three sets of every fold
  /// are pairwise disjoint and cover everything. Throws ConsistencyError.
  void validate() const;
};

/// Stratified k-fold test partition; inside each fold's remainder a
/// stratified `validation_fraction` goes to validation. Indices are sorted.
/// Throws ConfigError when k < 2 or a class has fewer than k members.
FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                    double validation_fraction = 0.2);

/// Stratified subsample of `n` indices (ascending), allocated per class by
/// largest remainder. n ≥ labels.size() returns every index.
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, std::size_t n, std::uint64_t seed);

void to_json(nlohmann::json& j, const Fold& f);
void to_json(nlohmann::json& j, const FoldPlan& p);

}  // namespace hgunet::train
