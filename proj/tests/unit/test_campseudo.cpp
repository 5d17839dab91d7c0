#include <doctest.h>

#include <cmath>

#include "oeem/cam.hpp"
#include "oeem/classifier.hpp"
#include "oeem/errors.hpp"
#include "oeem/gradcheck.hpp"
#include "oeem/synth.hpp"
#include "test_support.hpp"

using namespace oeem;
using oeem::test::random_tensor;

namespace {

PatchLabel label_of(std::initializer_list<std::size_t> classes) {
  PatchLabel l;
  for (std::size_t c : classes) l.set(c);
  return l;
}

struct ToySet {
  Dataset ds;
  std::vector<Tensor> patches;
  std::vector<PatchLabel> labels;
  std::vector<PatchRecord> records;
};

ToySet separable_toy() {
  SynthConfig cfg;
  cfg.image_count = 8;
  cfg.image_side = 128;
  cfg.contrast_gap = 1.0;
  cfg.smoothness = 48;
  cfg.seed = 3;
  ToySet t{generate_dataset(cfg), {}, {}, {}};
  for (std::size_t id : t.ds.train_ids) {
    for (auto& p : crop_patches(t.ds.images[id], t.ds.masks[id], id, 32, 16, 0.01, 2)) {
      t.patches.push_back(p.image);
      t.labels.push_back(p.record.label);
      t.records.push_back(p.record);
    }
  }
  return t;
}

const ClassifierTraining& toy_classifier(const ToySet& t) {
  static const ClassifierTraining trained = [&] {
    ClassifierHp hp;
    hp.epochs = 15;
    hp.seed = 5;
    return train_classifier(t.patches, t.labels, hp);
  }();
  return trained;
}

const ToySet& toy() {
  static const ToySet t = separable_toy();
  return t;
}

}  // namespace

TEST_SUITE("campseudo") {

TEST_CASE("pseudomask suppresses absent classes") {
  Tensor cam = Tensor::chw(2, 1, 3);
  cam[0] = 0.9;  // class 0 strongest everywhere
  cam[1] = 0.8;
  cam[2] = 0.1;
  cam[3] = 0.2;
  cam[4] = 0.3;
  cam[5] = 0.4;
  const PseudoMask both = make_pseudomask(cam, label_of({0, 1}));
  CHECK(both[0] == 0);
  CHECK(both[2] == 1);
  const PseudoMask only1 = make_pseudomask(cam, label_of({1}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(only1[i] == 1);
  CHECK_THROWS_AS(make_pseudomask(cam, PatchLabel{}), Error);
}

TEST_CASE("pseudomask ties go to the lower class") {
  const Tensor cam = Tensor::chw(2, 2, 2, 0.5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(make_pseudomask(cam, label_of({0, 1}))[i] == 0);
}

TEST_CASE("patch refinement zeroes absent channels and saturates single classes") {
  Rng r(1);
  Tensor cam = random_tensor({2, 3, 3}, r, 0, 1);
  Tensor single = cam;
  refine_patch_cam(single, label_of({1}));
  for (double v : single.plane(0)) CHECK(v == 0.0);
  for (double v : single.plane(1)) CHECK(v == 1.0);
  Tensor both = cam;
  refine_patch_cam(both, label_of({0, 1}));
  CHECK(both == cam);
}

TEST_CASE("classifier BCE gradient matches finite differences") {
  Rng r(4);
  ClassifierNet net = make_classifier(2, 3, r);
  const Tensor patch = random_tensor({3, 8, 8}, r, 0, 1);
  const PatchLabel lab = label_of({1});
  const Objective obj = [&](ParamStore&) { return classifier_loss_and_grad(net, patch, lab); };
  CHECK(grad_check(obj, net.params, 1e-5) < 1e-5);
}

TEST_CASE("cam has class channels at image resolution") {
  Rng r(2);
  const ClassifierNet net = make_classifier(2, 3, r);
  const Tensor img = random_tensor({3, 24, 20}, r, 0, 1);
  const Tensor cam = compute_cam(net, img);
  CHECK(cam.shape() == std::vector<std::size_t>{2, 24, 20});
}

TEST_CASE("multiscale cam is min-max normalised and skips tiny scales") {
  Rng r(2);
  const ClassifierNet net = make_classifier(2, 3, r);
  const Tensor img = random_tensor({3, 16, 16}, r, 0, 1);
  std::vector<double> skipped;
  const std::vector<double> scales = {0.25, 1.0, 1.5};
  const Tensor cam = multiscale_cam(net, img, scales, &skipped);
  CHECK(skipped == std::vector<double>{0.25});
  for (std::size_t c = 0; c < 2; ++c) {
    const auto p = cam.plane(c);
    CHECK(*std::min_element(p.begin(), p.end()) == 0.0);
    CHECK(*std::max_element(p.begin(), p.end()) == 1.0);
  }
  const std::vector<double> tiny = {0.1};
  CHECK_THROWS_AS(multiscale_cam(net, img, tiny), ShapeError);
}

TEST_CASE("classifier training is deterministic") {
  const ToySet& t = toy();
  ClassifierHp hp;
  hp.epochs = 1;
  hp.seed = 9;
  const std::span<const Tensor> few(t.patches.data(), 16);
  const std::span<const PatchLabel> few_labels(t.labels.data(), 16);
  const auto a = train_classifier(few, few_labels, hp);
  const auto b = train_classifier(few, few_labels, hp);
  CHECK(a.net.params.same_values(b.net.params));
  CHECK(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("separable toy set is learned by the classifier") {
  const ToySet& t = toy();
  const auto& trained = toy_classifier(t);
  CHECK(multilabel_accuracy(trained.net, t.patches, t.labels) >= 0.95);
}

TEST_CASE("gland cam is higher on gland pixels") {
  const ToySet& t = toy();
  const auto& trained = toy_classifier(t);
  double on = 0.0, off = 0.0;
  std::size_t n_on = 0, n_off = 0;
  for (std::size_t id : t.ds.train_ids) {
    const Tensor cam = compute_cam(trained.net, t.ds.images[id]);
    const auto gland = cam.plane(kGland);
    for (std::size_t p = 0; p < gland.size(); ++p) {
      if (t.ds.masks[id][p] == kGland) {
        on += gland[p];
        ++n_on;
      } else {
        off += gland[p];
        ++n_off;
      }
    }
  }
  CHECK(on / static_cast<double>(n_on) > off / static_cast<double>(n_off));
}

TEST_CASE("image pseudomasks never carry absent classes") {
  const ToySet& t = toy();
  const auto& trained = toy_classifier(t);
  PseudoOptions opts;
  opts.scales = {1.0, 1.5};
  for (std::size_t id : t.ds.train_ids) {
    std::vector<PatchRecord> recs;
    for (const auto& r : t.records) {
      if (r.image_id == id) recs.push_back(r);
    }
    const ImagePseudo ip = image_pseudomask(trained.net, t.ds.images[id], recs, opts);
    for (std::size_t p = 0; p < ip.mask.size(); ++p) CHECK(ip.label.has(ip.mask[p]));
    // Pixels covered only by patches labelled with one class c take class c.
    const std::size_t w = ip.mask.width();
    std::vector<std::uint32_t> seen(ip.mask.size(), 0);
    for (const auto& r : recs) {
      for (std::size_t y = 0; y < r.side; ++y) {
        for (std::size_t x = 0; x < r.side; ++x) seen[(r.row + y) * w + r.col + x] |= r.label.bits;
      }
    }
    for (std::size_t p = 0; p < seen.size(); ++p) {
      if (seen[p] == 1u || seen[p] == 2u) {
        CHECK(ip.mask[p] == (seen[p] == 1u ? 0 : 1));
      }
    }
  }
}

}  // TEST_SUITE
