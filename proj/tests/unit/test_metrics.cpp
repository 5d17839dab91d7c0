#include <doctest.h>

#include <fstream>
#include <sstream>

#include "oeem/errors.hpp"
#include "oeem/metrics.hpp"
#include "oeem/rng.hpp"
#include "test_support.hpp"

using namespace oeem;

TEST_SUITE("metrics") {

TEST_CASE("2x2 hand case") {
  const LabelMap pred(2, 2, std::vector<std::uint8_t>{0, 0, 1, 1});
  const LabelMap gt(2, 2, std::vector<std::uint8_t>{0, 1, 1, 1});
  const EvalReport r = evaluate(std::span(&pred, 1), std::span(&gt, 1), 2);
  CHECK(std::abs(r.classes[0].iou - 0.5) < 1e-12);
  CHECK(std::abs(r.classes[1].iou - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(r.miou - 7.0 / 12.0) < 1e-12);
}

TEST_CASE("counts equal brute-force confusion over several images") {
  Rng rng(5);
  std::vector<LabelMap> preds, gts;
  for (int k = 0; k < 4; ++k) {
    LabelMap p(6, 5), g(6, 5);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = static_cast<std::uint8_t>(rng.below(3));
      g[i] = rng.bernoulli(0.1) ? kIgnoreLabel : static_cast<std::uint8_t>(rng.below(3));
    }
    preds.push_back(p);
    gts.push_back(g);
  }
  const EvalReport r = evaluate(preds, gts, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      for (std::size_t i = 0; i < preds[k].size(); ++i) {
        if (gts[k][i] == kIgnoreLabel) continue;
        const bool pc = preds[k][i] == c, gc = gts[k][i] == c;
        tp += pc && gc;
        fp += pc && !gc;
        fn += !pc && gc;
      }
    }
    CHECK(r.classes[c].tp == tp);
    CHECK(r.classes[c].fp == fp);
    CHECK(r.classes[c].fn == fn);
    CHECK(r.classes[c].iou == static_cast<double>(tp) / static_cast<double>(tp + fp + fn));
    CHECK(r.classes[c].dice == r.classes[c].f1);
  }
}

TEST_CASE("absent class scores one and is flagged") {
  const LabelMap m(2, 2, 0);
  const EvalReport r = evaluate(std::span(&m, 1), std::span(&m, 1), 2);
  CHECK(r.classes[1].absent);
  CHECK(r.classes[1].iou == 1.0);
  CHECK(r.miou == 1.0);
}

TEST_CASE("mismatched inputs are rejected") {
  const LabelMap a(2, 2), b(2, 3);
  CHECK_THROWS_AS(evaluate(std::span(&a, 1), std::span(&b, 1), 2), ShapeError);
  const LabelMap bad(2, 2, 5);
  CHECK_THROWS_AS(evaluate(std::span(&bad, 1), std::span(&a, 1), 2), ShapeError);
}

TEST_CASE("eval csv layout") {
  const auto dir = test::scratch_dir("metrics_csv");
  const LabelMap pred(2, 2, std::vector<std::uint8_t>{0, 0, 1, 1});
  const LabelMap gt(2, 2, std::vector<std::uint8_t>{0, 1, 1, 1});
  write_eval_csv(dir / "eval.csv", evaluate(std::span(&pred, 1), std::span(&gt, 1), 2));
  std::ifstream is(dir / "eval.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "class,tp,fp,fn,iou,dice,precision,recall,f1,absent");
  std::getline(is, line);
  CHECK(line.rfind("0,1,1,0,0.500000,", 0) == 0);
  std::getline(is, line);
  std::getline(is, line);
  CHECK(line.rfind("mean,", 0) == 0);
  std::ostringstream os;
  print_report(os, evaluate(std::span(&pred, 1), std::span(&gt, 1), 2));
  CHECK(os.str().find("0.5833") != std::string::npos);
}

}  // TEST_SUITE
