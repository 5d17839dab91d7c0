#include <doctest.h>

#include <cmath>
#include <fstream>

#include "oeem/dataset_io.hpp"
#include "oeem/errors.hpp"
#include "oeem/png_io.hpp"
#include "oeem/synth.hpp"
#include "test_support.hpp"

using namespace oeem;

TEST_SUITE("io") {

TEST_CASE("mask png round trip") {
  const auto dir = test::scratch_dir("io_mask");
  LabelMap m(5, 7, 0);
  m.at(1, 2) = 1;
  m.at(4, 6) = kIgnoreLabel;
  write_mask(dir / "m.png", m);
  CHECK(read_mask(dir / "m.png", 2) == m);
}

TEST_CASE("mask with an out-of-range value names it") {
  const auto dir = test::scratch_dir("io_bad_mask");
  LabelMap m(2, 2, 0);
  m.at(0, 1) = 7;
  write_mask(dir / "m.png", m);
  try {
    read_mask(dir / "m.png", 2);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
  CHECK_THROWS_AS(read_mask(dir / "missing.png", 2), IoError);
}

TEST_CASE("image png round trip within one grey level") {
  const auto dir = test::scratch_dir("io_image");
  Rng r(1);
  const Tensor img = test::random_tensor({3, 6, 4}, r, 0.0, 1.0);
  write_image(dir / "i.png", img);
  const Tensor back = read_image(dir / "i.png");
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255 + 1e-12);
}

TEST_CASE("patches csv round trip") {
  const auto dir = test::scratch_dir("io_csv");
  PatchLabel a, b;
  a.set(0);
  b.set(0);
  b.set(1);
  std::vector<PatchRecord> recs = {{0, 0, 16, 32, a}, {3, 16, 0, 32, b}};
  write_patches_csv(dir / "p.csv", recs, 2);
  std::ifstream is(dir / "p.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "image_id,row,col,side,label_bits");
  CHECK(read_patches_csv(dir / "p.csv") == recs);
}

TEST_CASE("dataset save and load") {
  const auto dir = test::scratch_dir("io_dataset");
  SynthConfig cfg;
  cfg.image_count = 4;
  cfg.image_side = 32;
  cfg.smoothness = 12;
  const Dataset ds = generate_dataset(cfg);
  save_dataset(dir, ds, {});
  CHECK(std::filesystem::exists(dir / "train" / "images" / image_file_name(ds.train_ids[0])));
  CHECK(std::filesystem::exists(dir / "test" / "masks" / image_file_name(ds.test_ids[0])));
  const Dataset back = load_dataset(dir, 2);
  CHECK(back.train_ids == ds.train_ids);
  CHECK(back.test_ids == ds.test_ids);
  CHECK(back.masks == ds.masks);
  CHECK_THROWS_AS(load_dataset(dir / "nope", 2), IoError);
}

}  // TEST_SUITE
