#include "oeem/gradcheck_suite.hpp"

#include <cmath>

#include "oeem/classifier.hpp"
#include "oeem/gradcheck.hpp"
#include "oeem/loss.hpp"
#include "oeem/ops.hpp"
#include "oeem/rng.hpp"
#include "oeem/segnet.hpp"

namespace oeem {

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

LabelMap random_mask(std::size_t h, std::size_t w, Rng& rng) {
  LabelMap m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<std::uint8_t>(rng.below(2));
  m[0] = 0;
  m[1] = 1;
  return m;
}

// Sum_p W_p * -log softmax(x)_{gt_p} / N, written out directly.
double frozen_weight_objective(const Tensor& x, const LabelMap& gt, const Tensor& w) {
  const std::size_t hw = x.height() * x.width();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < hw; ++p) {
    if (gt[p] == kIgnoreLabel) continue;
    ++n;
    double m = x[p];
    for (std::size_t c = 1; c < x.channels(); ++c) m = std::max(m, x[c * hw + p]);
    double z = 0.0;
    for (std::size_t c = 0; c < x.channels(); ++c) z += std::exp(x[c * hw + p] - m);
    sum += w[p] * (m + std::log(z) - x[gt[p] * hw + p]);
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(double tolerance, double eps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> results;
  auto record = [&](std::string name, double err) {
    results.push_back({std::move(name), err, err < tolerance});
  };

  {
    ParamStore ps;
    const auto xi = ps.add("input", {2, 4, 4});
    const auto ki = ps.add("kernel", {3, 2, 3, 3});
    const auto bi = ps.add("bias", {3});
    ps.value(xi) = random_tensor({2, 4, 4}, rng);
    ps.value(ki) = random_tensor({3, 2, 3, 3}, rng);
    ps.value(bi) = random_tensor({3}, rng);
    for (std::size_t stride : {1u, 2u}) {
      const Tensor r = random_tensor(conv2d(ps.value(xi), ps.value(ki), ps.value(bi), stride, 1).shape(), rng);
      const double err = grad_check(
          [&](ParamStore& p) {
            const Tensor y = conv2d(p.value(xi), p.value(ki), p.value(bi), stride, 1);
            const Conv2dGrads g = conv2d_backward(p.value(xi), p.value(ki), stride, 1, r);
            p.grad(xi) = g.input;
            p.grad(ki) = g.kernel;
            p.grad(bi) = g.bias;
            return dot(y, r);
          },
          ps, eps);
      record("conv2d(stride=" + std::to_string(stride) + ",pad=1)", err);
    }
  }

  for (auto [oh, ow] : {std::pair<std::size_t, std::size_t>{7, 9}, {3, 2}}) {
    ParamStore ps;
    const auto xi = ps.add("input", {2, 4, 5});
    ps.value(xi) = random_tensor({2, 4, 5}, rng);
    const Tensor r = random_tensor({2, oh, ow}, rng);
    const double err = grad_check(
        [&](ParamStore& p) {
          p.grad(xi) = bilinear_resize_backward(r, 4, 5);
          return dot(bilinear_resize(p.value(xi), oh, ow), r);
        },
        ps, eps);
    record("bilinear_resize(4x5->" + std::to_string(oh) + "x" + std::to_string(ow) + ")", err);
  }

  {
    ParamStore ps;
    const auto xi = ps.add("input", {2, 5, 6});
    ps.value(xi) = random_tensor({2, 5, 6}, rng);
    const Tensor r = random_tensor({2, 2, 3}, rng);
    const double err = grad_check(
        [&](ParamStore& p) {
          p.grad(xi) = avg_pool2_backward(r, 5, 6);
          return dot(avg_pool2(p.value(xi)), r);
        },
        ps, eps);
    record("avg_pool2", err);
  }

  {
    ParamStore ps;
    const auto xi = ps.add("logits", {3, 4, 4});
    ps.value(xi) = random_tensor({3, 4, 4}, rng, 2.0);
    const Tensor r = random_tensor({3, 4, 4}, rng);
    const double err = grad_check(
        [&](ParamStore& p) {
          const Tensor y = softmax_channel(p.value(xi));
          p.grad(xi) = softmax_channel_backward(y, r);
          return dot(y, r);
        },
        ps, eps);
    record("softmax_channel", err);
  }

  const LabelMap gt = random_mask(4, 4, rng);
  {
    ParamStore ps;
    const auto xi = ps.add("logits", {2, 4, 4});
    ps.value(xi) = random_tensor({2, 4, 4}, rng, 2.0);
    const Tensor ones = Tensor::hw(4, 4, 1.0);
    const double err = grad_check(
        [&](ParamStore& p) {
          p.grad(xi) = plain_ce(p.value(xi), gt).grad;
          return frozen_weight_objective(p.value(xi), gt, ones);
        },
        ps, eps);
    record("softmax_ce", err);
  }

  PatchLabel both;
  both.set(0);
  both.set(1);
  for (MiningMode mode : kAllMiningModes) {
    ParamStore ps;
    const auto xi = ps.add("logits", {2, 4, 4});
    ps.value(xi) = random_tensor({2, 4, 4}, rng, 2.0);
    const MiningOptions opts{0.25};
    const Tensor frozen = mining_weights(ps.value(xi), gt, mode, opts);
    const double err = grad_check(
        [&](ParamStore& p) {
          p.grad(xi) = mining_loss(p.value(xi), gt, both, mode, opts).grad;
          return frozen_weight_objective(p.value(xi), gt, frozen);
        },
        ps, eps);
    record("weighted_ce[" + std::string(to_string(mode)) + "]", err);
  }

  {
    Rng init = rng.split("classifier");
    ClassifierNet net = make_classifier(2, 3, init);
    const Tensor patch = random_tensor({3, 16, 16}, rng);
    PatchLabel label;
    label.set(1);
    const double err = grad_check(
        [&](ParamStore&) {
          net.params.zero_grad();
          return classifier_loss_and_grad(net, patch, label);
        },
        net.params, eps);
    record("classifier_bce", err);
  }

  {
    Rng init = rng.split("segnet");
    SegNet net = make_segnet(2, 3, init);
    const Tensor img = random_tensor({3, 16, 16}, rng);
    const LabelMap mask = random_mask(16, 16, rng);
    const double err = grad_check(
        [&](ParamStore&) {
          net.params.zero_grad();
          SegNet::Trace trace;
          const LossAndGrad lg = plain_ce(net.forward(img, &trace), mask);
          net.backward(trace, lg.grad);
          return lg.loss;
        },
        net.params, eps);
    record("segnet_ce", err);
  }
  return results;
}

}  // namespace oeem
