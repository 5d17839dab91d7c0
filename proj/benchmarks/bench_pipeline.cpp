#include <benchmark/benchmark.h>

#include "oeem/cam.hpp"
#include "oeem/classifier.hpp"
#include "oeem/infer.hpp"
#include "oeem/segnet.hpp"

namespace {

oeem::Tensor image(std::size_t side) {
  oeem::Rng r(3);
  oeem::Tensor t = oeem::Tensor::chw(3, side, side);
  for (double& v : t.values()) v = r.uniform();
  return t;
}

void BM_SegForward(benchmark::State& state) {
  oeem::Rng r(1);
  const oeem::SegNet net = oeem::make_segnet(2, 3, r);
  const auto x = image(64);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_SegForward);

void BM_SlidingInfer(benchmark::State& state) {
  oeem::Rng r(1);
  const oeem::SegNet net = oeem::make_segnet(2, 3, r);
  const auto x = image(96);
  const std::vector<double> scales = {0.75, 1.0, 1.25};
  for (auto _ : state) benchmark::DoNotOptimize(oeem::sliding_infer(net, x, 64, 48, scales));
}
BENCHMARK(BM_SlidingInfer)->Unit(benchmark::kMillisecond);

void BM_MultiscaleCam(benchmark::State& state) {
  oeem::Rng r(2);
  const oeem::ClassifierNet net = oeem::make_classifier(2, 3, r);
  const auto x = image(32);
  const std::vector<double> scales = {1.0, 1.25, 1.5, 1.75, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(oeem::multiscale_cam(net, x, scales));
}
BENCHMARK(BM_MultiscaleCam)->Unit(benchmark::kMillisecond);

}  // namespace
