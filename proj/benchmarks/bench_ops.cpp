#include <benchmark/benchmark.h>

#include "oeem/ops.hpp"
#include "oeem/rng.hpp"

namespace {

oeem::Tensor random(std::vector<std::size_t> shape, std::uint64_t seed) {
  oeem::Rng r(seed);
  oeem::Tensor t(std::move(shape));
  for (double& v : t.values()) v = r.uniform(-1, 1);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto x = random({8, side, side}, 1);
  const auto k = random({16, 8, 3, 3}, 2);
  const auto b = random({16}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(oeem::conv2d(x, k, b, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(16 * 8 * 9 * side * side));
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(32)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto x = random({8, side, side}, 1);
  const auto k = random({16, 8, 3, 3}, 2);
  const auto g = random({16, side, side}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(oeem::conv2d_backward(x, k, 1, 1, g));
}
BENCHMARK(BM_Conv2dBackward)->Arg(32)->Arg(64);

void BM_BilinearUpsample8x(benchmark::State& state) {
  const auto x = random({2, 8, 8}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(oeem::bilinear_resize(x, 64, 64));
}
BENCHMARK(BM_BilinearUpsample8x);

}  // namespace
