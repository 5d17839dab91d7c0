#include <benchmark/benchmark.h>

#include "oeem/loss.hpp"
#include "oeem/rng.hpp"

namespace {

struct Crop {
  oeem::Tensor logits;
  oeem::LabelMap gt;
};

Crop make_crop(std::size_t side) {
  oeem::Rng r(9);
  Crop c{oeem::Tensor::chw(2, side, side), oeem::LabelMap(side, side)};
  for (double& v : c.logits.values()) v = r.uniform(-4, 4);
  for (std::size_t i = 0; i < c.gt.size(); ++i) c.gt[i] = static_cast<std::uint8_t>(r.below(2));
  return c;
}

void BM_MiningLoss(benchmark::State& state) {
  const auto mode = oeem::kAllMiningModes[static_cast<std::size_t>(state.range(0))];
  const Crop c = make_crop(64);
  oeem::PatchLabel both;
  both.set(0);
  both.set(1);
  for (auto _ : state) benchmark::DoNotOptimize(oeem::mining_loss(c.logits, c.gt, both, mode));
  state.SetLabel(std::string(oeem::to_string(mode)));
}
BENCHMARK(BM_MiningLoss)->DenseRange(0, 5);

void BM_WLNorm(benchmark::State& state) {
  const Crop c = make_crop(static_cast<std::size_t>(state.range(0)));
  const oeem::LossMap lm = oeem::pixel_ce(c.logits, c.gt);
  for (auto _ : state) benchmark::DoNotOptimize(oeem::w_l_norm(lm));
}
BENCHMARK(BM_WLNorm)->Arg(64)->Arg(256);

}  // namespace
