#include <benchmark/benchmark.h>

#include "hgunet/numeric/matrix.hpp"
#include "hgunet/numeric/ops.hpp"
#include "hgunet/numeric/rng.hpp"

using namespace hgunet;

namespace {

nn::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  nn::RngStream rng(seed);
  nn::Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// Node-feature shaped products: n × 64 times 64 × 64.
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 1);
  const auto b = random_matrix(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(512)->Arg(2048);

// Weight gradient: Xᵀ·G.
void BM_MatmulTN(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(n, 64, 3);
  const auto g = random_matrix(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(nn::matmul_tn(x, g));
}
BENCHMARK(BM_MatmulTN)->Arg(512)->Arg(2048);

}  // namespace
