#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oeem/errors.hpp"
#include "oeem/rng.hpp"
#include "oeem/synth.hpp"
#include "test_support.hpp"

using namespace oeem;
using oeem::test::random_tensor;

namespace {

double class_mean(const Tensor& img, const LabelMap& m, std::uint8_t cls, std::size_t* n) {
  double s = 0.0;
  const std::size_t hw = m.size();
  for (std::size_t p = 0; p < hw; ++p) {
    if (m[p] != cls) continue;
    for (std::size_t c = 0; c < img.channels(); ++c) s += img[c * hw + p];
    *n += img.channels();
  }
  return s;
}

double mean_gap(const Dataset& ds) {
  double s0 = 0, s1 = 0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    s0 += class_mean(ds.images[i], ds.masks[i], 0, &n0);
    s1 += class_mean(ds.images[i], ds.masks[i], 1, &n1);
  }
  return std::abs(s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0));
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("default dataset has 20 train and 20 test images with both classes") {
  const Dataset ds = generate_dataset(SynthConfig{});
  CHECK(ds.train_ids.size() == 20);
  CHECK(ds.test_ids.size() == 20);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    CHECK(ds.images[i].channels() == 3);
    CHECK(presence_label(ds.masks[i], 2).count() == 2);
    for (double v : ds.images[i].values()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("train split uses the 85:80 proportion") {
  SynthConfig cfg;
  cfg.image_count = 165;
  cfg.image_side = 32;
  cfg.smoothness = 8;
  const Dataset ds = generate_dataset(cfg);
  CHECK(ds.train_ids.size() == 85);
  CHECK(ds.test_ids.size() == 80);
}

TEST_CASE("class means differ by the contrast gap") {
  for (double gap : {1.0, 0.15}) {
    SynthConfig cfg;
    cfg.contrast_gap = gap;
    cfg.image_count = 12;
    CHECK(std::abs(mean_gap(generate_dataset(cfg)) - gap) <= 0.02);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg;
  cfg.image_count = 4;
  const Dataset a = generate_dataset(cfg), b = generate_dataset(cfg);
  CHECK(a.images == b.images);
  CHECK(a.masks == b.masks);
  cfg.seed = 8;
  CHECK_FALSE(generate_dataset(cfg).masks == a.masks);
}

TEST_CASE("invalid synth config is rejected") {
  SynthConfig cfg;
  cfg.contrast_gap = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.image_count = 1;
  CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
}

TEST_CASE("grid offsets touch the border") {
  CHECK(grid_offsets(224, 112, 56) == std::vector<std::size_t>{0, 56, 112});
  CHECK(grid_offsets(100, 40, 30) == std::vector<std::size_t>{0, 30, 60});
  CHECK(grid_offsets(10, 10, 3) == std::vector<std::size_t>{0});
}

TEST_CASE("224 image at side 112 stride 56 yields nine patches") {
  Tensor img = Tensor::chw(3, 224, 224, 0.5);
  LabelMap m(224, 224, 0);
  for (std::size_t y = 0; y < 224; ++y) {
    for (std::size_t x = 0; x < 224; ++x) m.at(y, x) = ((x / 7 + y / 7) % 2) ? 1 : 0;
  }
  const auto patches = crop_patches(img, m, 0, 112, 56, 0.01, 2);
  REQUIRE(patches.size() == 9);
  std::vector<std::pair<std::size_t, std::size_t>> offs;
  for (const auto& p : patches) offs.emplace_back(p.record.row, p.record.col);
  for (std::size_t r : {0u, 56u, 112u}) {
    for (std::size_t c : {0u, 56u, 112u}) {
      CHECK(std::find(offs.begin(), offs.end(), std::make_pair(r, c)) != offs.end());
    }
  }
}

TEST_CASE("patch labels are sound") {
  SynthConfig cfg;
  cfg.image_count = 4;
  const Dataset ds = generate_dataset(cfg);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    for (const auto& p : crop_patches(ds.images[i], ds.masks[i], i, 32, 16, 0.05, 2)) {
      const auto& r = p.record;
      std::size_t n1 = 0;
      for (std::size_t y = 0; y < r.side; ++y) {
        for (std::size_t x = 0; x < r.side; ++x) n1 += ds.masks[i].at(r.row + y, r.col + x);
      }
      const double total = static_cast<double>(r.side * r.side);
      const std::size_t n0 = r.side * r.side - n1;
      CHECK(r.label.has(0) == (n0 > 0 && n0 >= 0.05 * total));
      CHECK(r.label.has(1) == (n1 > 0 && n1 >= 0.05 * total));
      CHECK(p.image == crop(ds.images[i], r.row, r.col, r.side, r.side));
    }
  }
}

TEST_CASE("patch label bits round trip") {
  PatchLabel l;
  l.set(0);
  CHECK(l.to_bits(2) == "10");
  CHECK(PatchLabel::from_bits("10") == l);
  l.set(1);
  CHECK(l.count() == 2);
  CHECK(PatchLabel::from_bits("11") == l);
  CHECK_THROWS_AS(PatchLabel::from_bits("1x"), Error);
}

TEST_CASE("merge is the identity at stride equal to side") {
  Rng r(1);
  const Tensor img = random_tensor({2, 12, 12}, r);
  const LabelMap m(12, 12, 0);
  const auto patches = crop_patches(img, m, 0, 4, 4, 0.0, 2);
  std::vector<Tensor> maps;
  std::vector<PatchRecord> recs;
  for (const auto& p : patches) {
    maps.push_back(p.image);
    recs.push_back(p.record);
  }
  CHECK(merge_patches(maps, recs, 12, 12) == img);
}

TEST_CASE("merge averages overlaps") {
  std::vector<Tensor> maps = {Tensor::chw(1, 3, 3, 0.0), Tensor::chw(1, 3, 3, 1.0)};
  std::vector<PatchRecord> recs = {{0, 0, 0, 3, {}}, {0, 0, 2, 3, {}}};
  const Tensor merged = merge_patches(maps, recs, 3, 5);
  CHECK(merged.at(0, 0, 0) == 0.0);
  CHECK(merged.at(0, 1, 2) == 0.5);
  CHECK(merged.at(0, 2, 4) == 1.0);
}

TEST_CASE("merge rejects incomplete coverage") {
  std::vector<Tensor> maps = {Tensor::chw(1, 2, 2, 1.0)};
  std::vector<PatchRecord> recs = {{0, 0, 0, 2, {}}};
  CHECK_THROWS_AS(merge_patches(maps, recs, 3, 3), ShapeError);
}

TEST_CASE("flips are involutions") {
  Rng r(6);
  const Tensor t = random_tensor({2, 3, 5}, r);
  CHECK(flip_horizontal(flip_horizontal(t)) == t);
  CHECK(flip_vertical(flip_vertical(t)) == t);
  CHECK(flip_horizontal(t).at(1, 2, 0) == t.at(1, 2, 4));
  LabelMap m(2, 2, std::vector<std::uint8_t>{0, 1, 1, 1});
  CHECK(flip_vertical(m).at(0, 0) == 1);
}

TEST_CASE("boundary corruption flips the requested share of the band only") {
  LabelMap m(20, 20, 0);
  for (std::size_t y = 0; y < 20; ++y) {
    for (std::size_t x = 10; x < 20; ++x) m.at(y, x) = 1;
  }
  Rng r(3);
  const LabelMap noisy = corrupt_boundary(m, 0.2, 2, 2, r);
  // Band: columns 8..11 (Chebyshev distance <= 2 from the other class).
  std::size_t flipped = 0;
  for (std::size_t y = 0; y < 20; ++y) {
    for (std::size_t x = 0; x < 20; ++x) {
      if (noisy.at(y, x) == m.at(y, x)) continue;
      ++flipped;
      CHECK((x >= 8 && x <= 11));
    }
  }
  CHECK(flipped == 16);
  Rng r2(3);
  CHECK(corrupt_boundary(m, 0.2, 2, 2, r2) == noisy);
  Rng r3(3);
  CHECK(corrupt_boundary(m, 0.0, 2, 2, r3) == m);
  CHECK_THROWS_AS(corrupt_boundary(m, 1.5, 2, 2, r3), ConfigError);
}

}  // TEST_SUITE
