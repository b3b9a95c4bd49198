#include <benchmark/benchmark.h>

#include <random>

#include "dynkt/layers.hpp"
#include "dynkt/ops.hpp"
#include "dynkt/stats.hpp"

using namespace dynkt;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  return init::uniform(std::move(shape), -1.0, 1.0, rng);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

// Batch 32, window 50, 100 channels in and out, kernel 3.
void BM_Conv1d(benchmark::State& state) {
  const Tensor x = random_tensor({32, 50, 100}, 3);
  const Tensor w = random_tensor({100, 3, 100}, 4);
  const Tensor bias = random_tensor({100}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(conv1d(x, w, bias));
}
BENCHMARK(BM_Conv1d);

void BM_BiGru(benchmark::State& state) {
  Rng rng(6);
  const auto units = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({32, 50, 100}, 7);
  const auto fwd = GruParams::create(100, units, rng);
  const auto bwd = GruParams::create(100, units, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bigru(x, fwd, bwd, false).last);
}
BENCHMARK(BM_BiGru)->Arg(8)->Arg(64);

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(8);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng() % 1000) / 1000.0;
    labels[i] = static_cast<int>(rng() % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(stats::auc(scores, labels));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
