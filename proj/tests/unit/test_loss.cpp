#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oeem/errors.hpp"
#include "oeem/gradcheck.hpp"
#include "oeem/loss.hpp"
#include "oeem/params.hpp"
#include "oeem/rng.hpp"
#include "test_support.hpp"

using namespace oeem;
using oeem::test::random_tensor;

namespace {

// Two-class logits for gt 0 whose pixel CE equals `ce` exactly in real arithmetic.
double logit_for_ce(double ce) { return -std::log(std::expm1(ce)); }

Tensor logits_for_losses(const std::vector<double>& ces) {
  Tensor l = Tensor::chw(2, 1, ces.size());
  for (std::size_t i = 0; i < ces.size(); ++i) l[i] = logit_for_ce(ces[i]);
  return l;
}

double oracle_ce(const Tensor& logits, std::size_t pixel, std::size_t cls) {
  const std::size_t hw = logits.height() * logits.width();
  double m = -1e300;
  for (std::size_t c = 0; c < logits.channels(); ++c) m = std::max(m, logits[c * hw + pixel]);
  double s = 0.0;
  for (std::size_t c = 0; c < logits.channels(); ++c) s += std::exp(logits[c * hw + pixel] - m);
  return -(logits[cls * hw + pixel] - m - std::log(s));
}

LabelMap random_mask(std::size_t h, std::size_t w, std::size_t classes, Rng& r,
                     double ignore = 0.0) {
  LabelMap m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = r.bernoulli(ignore) ? kIgnoreLabel : static_cast<std::uint8_t>(r.below(classes));
  }
  return m;
}

LossMap loss_map_of(const std::vector<double>& v) {
  LossMap lm{Tensor::hw(1, v.size()), std::vector<std::uint8_t>(v.size(), 1), v.size()};
  for (std::size_t i = 0; i < v.size(); ++i) lm.loss[i] = v[i];
  return lm;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("pixel_ce hand value and ignore handling") {
  Tensor l = Tensor::chw(2, 1, 2);
  LabelMap gt(1, 2, std::vector<std::uint8_t>{0, kIgnoreLabel});
  const LossMap lm = pixel_ce(l, gt);
  CHECK(lm.loss[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(lm.valid_count == 1);
  CHECK(lm.valid[1] == 0);
  LabelMap bad(1, 2, std::vector<std::uint8_t>{0, 3});
  CHECK_THROWS_AS(pixel_ce(l, bad), ShapeError);
}

TEST_CASE("pixel_ce matches the log-sum-exp oracle") {
  Rng r(12);
  const Tensor l = random_tensor({3, 4, 5}, r, -6, 6);
  const LabelMap gt = random_mask(4, 5, 3, r);
  const LossMap lm = pixel_ce(l, gt);
  for (std::size_t i = 0; i < 20; ++i) CHECK(lm.loss[i] == doctest::Approx(oracle_ce(l, i, gt[i])));
}

TEST_CASE("confidence weights hand values") {
  Tensor l = Tensor::chw(2, 1, 1);
  l[0] = std::log(3.0);
  CHECK(w_c_max(l)[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w_c_diff(l)[0] == doctest::Approx(0.5).epsilon(1e-15));
  const Tensor u = Tensor::chw(3, 2, 2, 0.4);
  const Tensor diff = w_c_diff(u), max = w_c_max(u);
  for (double v : diff.values()) CHECK(v == 0.0);
  for (double v : max.values()) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("w_l_norm hand value") {
  const Tensor w = w_l_norm(loss_map_of({0.0, std::log(2.0)}));
  CHECK(std::abs(w[0] - 4.0 / 3.0) < 1e-12);
  CHECK(std::abs(w[1] - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("w_l_norm of a constant map is exactly one") {
  const Tensor w = w_l_norm(loss_map_of(std::vector<double>(37, 0.83)));
  for (double v : w.values()) CHECK(v == 1.0);
}

TEST_CASE("w_l_norm laws on random maps") {
  Rng r(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + r.below(60);
    std::vector<double> v(n);
    for (double& x : v) x = r.uniform(0.0, 8.0);
    const Tensor w = w_l_norm(loss_map_of(v));
    double mean = 0.0;
    for (double x : w.values()) mean += x;
    CHECK(std::abs(mean / static_cast<double>(n) - 1.0) < 1e-9);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (v[i] < v[j]) CHECK(w[i] > w[j]);
      }
    }
    std::vector<double> shifted = v;
    for (double& x : shifted) x += 3.7;
    const Tensor ws = w_l_norm(loss_map_of(shifted));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ws[i] - w[i]) < 1e-12);
  }
}

TEST_CASE("w_l_norm ignores invalid pixels") {
  LossMap lm = loss_map_of({0.0, 100.0, std::log(2.0)});
  lm.valid[1] = 0;
  lm.valid_count = 2;
  const Tensor w = w_l_norm(lm);
  CHECK(w[1] == 0.0);
  CHECK(std::abs(w[0] - 4.0 / 3.0) < 1e-12);
}

TEST_CASE("joint l_norm normalises across maps") {
  const std::vector<LossMap> maps = {loss_map_of({0.0}), loss_map_of({std::log(2.0)})};
  const auto w = w_l_norm_joint(maps);
  CHECK(std::abs(w[0][0] - 4.0 / 3.0) < 1e-12);
  CHECK(std::abs(w[1][0] - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("w_lc_mix hand value") {
  Tensor logits = Tensor::chw(2, 1, 2);
  logits[0] = std::log(9.0);  // max confidence 0.9
  logits[1] = std::log(1.5);  // max confidence 0.6
  const Tensor w = w_lc_mix(loss_map_of({0.0, std::log(2.0)}), logits);
  CHECK(std::abs(w[0] - 1.2) < 1e-12);
  CHECK(std::abs(w[1] - 0.4) < 1e-12);
}

TEST_CASE("weighted_ce is the mean of weighted pixel losses") {
  Rng r(2);
  const Tensor l = random_tensor({2, 3, 3}, r, -3, 3);
  const LabelMap gt = random_mask(3, 3, 2, r, 0.2);
  const Tensor w = random_tensor({3, 3}, r, 0.0, 2.0);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    if (gt[i] == kIgnoreLabel) continue;
    s += w[i] * oracle_ce(l, i, gt[i]);
    ++n;
  }
  CHECK(weighted_ce(l, gt, w).loss == doctest::Approx(s / static_cast<double>(n)).epsilon(1e-13));
  Tensor neg = w;
  neg[0] = -1.0;
  CHECK_THROWS_AS(weighted_ce(l, gt, neg), NumericError);
}

TEST_CASE("weighted_ce gradient matches finite differences with frozen weights") {
  Rng r(77);
  for (MiningMode mode : kAllMiningModes) {
    CAPTURE(to_string(mode));
    ParamStore ps;
    const auto li = ps.add("logits", {2, 4, 4});
    for (double& v : ps.value(li).values()) v = r.uniform(-2, 2);
    const LabelMap gt = random_mask(4, 4, 2, r);
    const Tensor w = mining_weights(ps.value(li), gt, mode);
    const Objective obj = [&](ParamStore& p) {
      const LossAndGrad lg = weighted_ce(p.value(li), gt, w);
      p.grad(li) += lg.grad;
      return lg.loss;
    };
    CHECK(grad_check(obj, ps, 1e-5) < 1e-5);
  }
}

TEST_CASE("detached l_norm gradient differs from the full derivative") {
  // Re-deriving the weights at every probe differentiates through W, which
  // the detached gradient deliberately omits.
  Rng r(5);
  ParamStore ps;
  const auto li = ps.add("logits", {2, 3, 3});
  for (double& v : ps.value(li).values()) v = r.uniform(-2, 2);
  const LabelMap gt = random_mask(3, 3, 2, r);
  const Objective full = [&](ParamStore& p) {
    const LossAndGrad lg = weighted_ce(p.value(li), gt, mining_weights(p.value(li), gt, MiningMode::kLNorm));
    p.grad(li) += lg.grad;
    return lg.loss;
  };
  CHECK(grad_check(full, ps, 1e-5) > 1e-3);
}

TEST_CASE("mining_loss hand value for l_norm") {
  // CE [0, ln 2]: pixel 0 saturated, pixel 1 at uniform logits.
  Tensor l = Tensor::chw(2, 1, 2);
  l[0] = 1000.0;
  const LabelMap gt(1, 2, 0);
  PatchLabel both;
  both.set(0);
  both.set(1);
  const LossAndGrad lg = mining_loss(l, gt, both, MiningMode::kLNorm);
  CHECK(std::abs(lg.loss - std::log(2.0) / 3.0) < 1e-12);
}

TEST_CASE("single-class patches use plain CE in every mode") {
  Rng r(8);
  PatchLabel one;
  one.set(1);
  for (int t = 0; t < 20; ++t) {
    const Tensor l = random_tensor({2, 5, 5}, r, -4, 4);
    const LabelMap gt = random_mask(5, 5, 2, r, 0.1);
    const LossAndGrad ref = plain_ce(l, gt);
    for (MiningMode mode : kAllMiningModes) {
      const LossAndGrad lg = mining_loss(l, gt, one, mode);
      CHECK(lg.loss == ref.loss);
      CHECK(lg.grad == ref.grad);
    }
  }
}

TEST_CASE("none mode on multi-class patches is plain CE") {
  Rng r(4);
  PatchLabel both;
  both.set(0);
  both.set(1);
  const Tensor l = random_tensor({2, 4, 4}, r);
  const LabelMap gt = random_mask(4, 4, 2, r);
  CHECK(mining_loss(l, gt, both, MiningMode::kNone).loss == plain_ce(l, gt).loss);
}

TEST_CASE("ohem keeps the top fraction") {
  const Tensor l = logits_for_losses({0.1, 5.0});
  const LabelMap gt(1, 2, 0);
  const LossAndGrad lg = ohem_loss(l, gt, 0.5);
  CHECK(lg.loss == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(lg.grad[0] == 0.0);
  CHECK(lg.grad[2] == 0.0);
  CHECK(lg.grad[1] != 0.0);
  CHECK_THROWS_AS(ohem_loss(l, gt, 0.0), ConfigError);
}

TEST_CASE("ohem breaks ties toward the earlier pixel") {
  const Tensor l = logits_for_losses({1.0, 1.0, 1.0, 0.5});
  const LabelMap gt(1, 4, 0);
  const Tensor w = mining_weights(l, gt, MiningMode::kOhem, {0.5});
  CHECK(w[0] == 2.0);
  CHECK(w[1] == 2.0);
  CHECK(w[2] == 0.0);
  CHECK(w[3] == 0.0);
}

TEST_CASE("noisy pixels lose share under l_norm and gain it under ohem") {
  Rng r(10);
  std::vector<double> ces(100);
  for (std::size_t i = 0; i < 100; ++i) ces[i] = i % 10 == 0 ? r.uniform(5.0, 8.0) : r.uniform(0.0, 0.1);
  const Tensor l = logits_for_losses(ces);
  const LabelMap gt(1, 100, 0);
  const LossMap lm = pixel_ce(l, gt);
  auto share = [&](const Tensor& w) {
    double noisy = 0.0, total = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      total += w[i] * lm.loss[i];
      if (i % 10 == 0) noisy += w[i] * lm.loss[i];
    }
    return noisy / total;
  };
  const double uniform = share(mining_weights(l, gt, MiningMode::kNone));
  CHECK(share(mining_weights(l, gt, MiningMode::kLNorm)) < uniform);
  CHECK(share(mining_weights(l, gt, MiningMode::kOhem, {0.25})) > uniform);
}

TEST_CASE("mining modes parse and print") {
  for (MiningMode m : kAllMiningModes) CHECK(parse_mining_mode(to_string(m)) == m);
  try {
    parse_mining_mode("hard");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("l_norm") != std::string::npos);
  }
}

TEST_CASE("all-ignore crops give zero loss") {
  const Tensor l = Tensor::chw(2, 2, 2);
  const LabelMap gt(2, 2, kIgnoreLabel);
  PatchLabel both;
  both.set(0);
  both.set(1);
  for (MiningMode m : kAllMiningModes) CHECK(mining_loss(l, gt, both, m).loss == 0.0);
}

}  // TEST_SUITE
