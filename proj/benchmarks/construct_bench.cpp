#include <benchmark/benchmark.h>

#include "bnnmix/construct.hpp"

namespace {

// Args: d, p with n = 0.7 d and a 10 x 10 x 10 class.
void BM_BuildEquivalenceClass(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int p = static_cast<int>(state.range(1));
  const auto data = bnnmix::generate_dataset(d, (7 * d) / 10, 0.01,
                                             bnnmix::TargetGenerator::kStandardGaussianY, 1);
  const auto shape = bnnmix::NetworkShape::two_layer(d, p);
  for (auto _ : state)
    benchmark::DoNotOptimize(bnnmix::build_equivalence_class(data, shape, {}, 2));
}
BENCHMARK(BM_BuildEquivalenceClass)->Args({50, 70})->Args({100, 170})->Unit(benchmark::kMillisecond);

void BM_ColumnSpaceSolve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto data = bnnmix::generate_dataset(d, (7 * d) / 10, 0.01,
                                             bnnmix::TargetGenerator::kStandardGaussianY, 1);
  for (auto _ : state) benchmark::DoNotOptimize(bnnmix::ColumnSpaceSolver(data.x1()));
}
BENCHMARK(BM_ColumnSpaceSolve)->Arg(50)->Arg(150)->Unit(benchmark::kMicrosecond);

}  // namespace
