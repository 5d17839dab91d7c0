#include <doctest.h>

#include <cmath>

#include "oeem/errors.hpp"
#include "oeem/gradcheck.hpp"
#include "oeem/infer.hpp"
#include "oeem/metrics.hpp"
#include "oeem/ops.hpp"
#include "oeem/segnet.hpp"
#include "oeem/synth.hpp"
#include "test_support.hpp"

using namespace oeem;
using oeem::test::random_tensor;

namespace {

Dataset toy_dataset(double gap) {
  SynthConfig cfg;
  cfg.image_count = 8;
  cfg.image_side = 48;
  cfg.contrast_gap = gap;
  cfg.smoothness = 24;
  cfg.seed = 11;
  return generate_dataset(cfg);
}

TrainConfig small_config() {
  TrainConfig tc;
  tc.iterations = 20;
  tc.batch = 2;
  tc.crop = 32;
  tc.seed = 4;
  return tc;
}

std::vector<Tensor> pick(const std::vector<Tensor>& v, const std::vector<std::size_t>& ids) {
  std::vector<Tensor> out;
  for (std::size_t i : ids) out.push_back(v[i]);
  return out;
}

std::vector<LabelMap> pick(const std::vector<LabelMap>& v, const std::vector<std::size_t>& ids) {
  std::vector<LabelMap> out;
  for (std::size_t i : ids) out.push_back(v[i]);
  return out;
}

}  // namespace

TEST_SUITE("segpipeline") {

TEST_CASE("segnet logits have image resolution") {
  Rng r(1);
  const SegNet net = make_segnet(2, 3, r);
  CHECK(net.forward(random_tensor({3, 40, 24}, r, 0, 1)).shape() ==
        std::vector<std::size_t>{2, 40, 24});
}

TEST_CASE("segnet CE gradient matches finite differences") {
  Rng r(3);
  SegNet net = make_segnet(2, 3, r);
  const Tensor img = random_tensor({3, 8, 8}, r, 0, 1);
  LabelMap gt(8, 8);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = static_cast<std::uint8_t>(r.below(2));
  const Objective obj = [&](ParamStore&) {
    SegNet::Trace tr;
    const Tensor logits = net.forward(img, &tr);
    const LossAndGrad lg = plain_ce(logits, gt);
    net.backward(tr, lg.grad);
    return lg.loss;
  };
  CHECK(grad_check(obj, net.params, 1e-5) < 1e-5);
}

TEST_CASE("train config validation") {
  TrainConfig tc = small_config();
  CHECK_NOTHROW(tc.validate(48));
  tc.crop = 64;
  CHECK_THROWS_AS(tc.validate(48), ConfigError);
  tc = small_config();
  tc.batch = 0;
  CHECK_THROWS_AS(tc.validate(48), ConfigError);
}

TEST_CASE("training is deterministic and records one loss per iteration") {
  const Dataset ds = toy_dataset(0.5);
  const auto imgs = pick(ds.images, ds.train_ids);
  const auto masks = pick(ds.masks, ds.train_ids);
  for (MiningMode mode : kAllMiningModes) {
    TrainConfig tc = small_config();
    tc.iterations = 3;
    tc.mining = mode;
    const SegTraining a = train_seg(imgs, masks, tc);
    const SegTraining b = train_seg(imgs, masks, tc);
    CHECK(a.loss_curve.size() == 3);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.net.params.same_values(b.net.params));
  }
  TrainConfig tc = small_config();
  tc.iterations = 3;
  tc.mining = MiningMode::kLNorm;
  tc.norm_scope = NormScope::kBatch;
  CHECK(train_seg(imgs, masks, tc).net.params.values_finite());
}

TEST_CASE("zero iterations returns the initialised net") {
  const Dataset ds = toy_dataset(0.5);
  TrainConfig tc = small_config();
  tc.iterations = 0;
  const SegTraining t = train_seg(pick(ds.images, ds.train_ids), pick(ds.masks, ds.train_ids), tc);
  CHECK(t.loss_curve.empty());
  const Tensor probs = sliding_infer(t.net, ds.images[ds.test_ids[0]], 32, 24, std::vector<double>{1.0});
  CHECK(probs.all_finite());
}

TEST_CASE("clean supervision on separable data fits the training set") {
  // Desk-scale geometry and default training schedule.
  SynthConfig cfg;
  cfg.image_count = 8;
  cfg.contrast_gap = 1.0;
  cfg.smoothness = 48;
  const Dataset ds = generate_dataset(cfg);
  const auto imgs = pick(ds.images, ds.train_ids);
  const auto masks = pick(ds.masks, ds.train_ids);
  const SegTraining t = train_seg(imgs, masks, TrainConfig{});
  std::vector<LabelMap> preds;
  const std::vector<double> scales = {0.75, 1.0, 1.25};
  for (const Tensor& img : imgs) preds.push_back(argmax_mask(sliding_infer(t.net, img, 64, 48, scales)));
  CHECK(evaluate(preds, masks, 2).miou >= 0.9);
}

TEST_CASE("sliding inference returns distributions") {
  Rng r(6);
  const SegNet net = make_segnet(2, 3, r);
  const Tensor img = random_tensor({3, 40, 40}, r, 0, 1);
  const std::vector<double> scales = {0.75, 1.0, 1.25};
  const Tensor p = sliding_infer(net, img, 16, 12, scales);
  const std::size_t hw = 1600;
  for (std::size_t i = 0; i < hw; ++i) {
    CHECK(p[i] + p[hw + i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[i] >= 0.0);
  }
}

TEST_CASE("one tile at scale 1 equals the softmax of a forward pass") {
  Rng r(7);
  const SegNet net = make_segnet(2, 3, r);
  const Tensor img = random_tensor({3, 24, 24}, r, 0, 1);
  const std::vector<double> one = {1.0};
  CHECK(sliding_infer(net, img, 64, 48, one) == softmax_channel(net.forward(img)));
}

TEST_CASE("argmax mask picks the largest channel") {
  Tensor p({2, 1, 2}, std::vector<double>{0.7, 0.2, 0.3, 0.8});
  const LabelMap m = argmax_mask(p);
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);
}

}  // TEST_SUITE
