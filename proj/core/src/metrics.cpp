#include "oeem/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalReport evaluate(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                    std::size_t classes) {
  if (preds.size() != gts.size()) throw ShapeError("evaluate: prediction/gt count mismatch");
  EvalReport r;
  r.classes.resize(classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const LabelMap& p = preds[i];
    const LabelMap& g = gts[i];
    if (p.height() != g.height() || p.width() != g.width()) {
      throw ShapeError("evaluate: prediction " + std::to_string(i) + " extents differ from gt");
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::uint8_t gv = g[k];
      if (gv == kIgnoreLabel) continue;
      const std::uint8_t pv = p[k];
      if (gv >= classes || (pv >= classes && pv != kIgnoreLabel)) {
        throw ShapeError("evaluate: label out of range");
      }
      if (pv == gv) {
        ++r.classes[gv].tp;
      } else {
        ++r.classes[gv].fn;
        if (pv != kIgnoreLabel) ++r.classes[pv].fp;
      }
    }
  }
  for (ClassScores& c : r.classes) {
    if (c.tp + c.fp + c.fn == 0) {
      c.absent = true;
      c.iou = c.dice = c.precision = c.recall = c.f1 = 1.0;
    } else {
      c.iou = ratio(c.tp, c.tp + c.fp + c.fn);
      c.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
      c.precision = ratio(c.tp, c.tp + c.fp);
      c.recall = ratio(c.tp, c.tp + c.fn);
      // Harmonic mean of precision and recall, reduced over the integer
      // counts: 2PR / (P + R) = 2TP / ((TP + FP) + (TP + FN)).
      c.f1 = ratio(2 * c.tp, (c.tp + c.fp) + (c.tp + c.fn));
    }
    r.miou += c.iou;
    r.mean_dice += c.dice;
    r.mean_f1 += c.f1;
  }
  const auto n = static_cast<double>(classes);
  r.miou /= n;
  r.mean_dice /= n;
  r.mean_f1 /= n;
  return r;
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "class,tp,fp,fn,iou,dice,precision,recall,f1,absent\n";
  double mp = 0.0, mr = 0.0;
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassScores& s = report.classes[c];
    os << c << ',' << s.tp << ',' << s.fp << ',' << s.fn << ',' << fmt(s.iou) << ','
       << fmt(s.dice) << ',' << fmt(s.precision) << ',' << fmt(s.recall) << ',' << fmt(s.f1)
       << ',' << (s.absent ? 1 : 0) << '\n';
    mp += s.precision;
    mr += s.recall;
  }
  const auto n = static_cast<double>(report.classes.size());
  os << "mean,,,," << fmt(report.miou) << ',' << fmt(report.mean_dice) << ',' << fmt(mp / n)
     << ',' << fmt(mr / n) << ',' << fmt(report.mean_f1) << ",\n";
}

void print_report(std::ostream& os, const EvalReport& report) {
  os << "class      IoU     Dice  F1(pixel)\n";
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const ClassScores& s = report.classes[c];
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-6zu %8.4f %8.4f %8.4f%s\n", c, s.iou, s.dice, s.f1,
                  s.absent ? "  (absent: scored 1 by convention)" : "");
    os << buf;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "mean   %8.4f %8.4f %8.4f\n", report.miou, report.mean_dice,
                report.mean_f1);
  os << buf;
}

}  // namespace oeem
