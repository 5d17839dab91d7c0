#ifndef OEEM_METRICS_HPP_
#define OEEM_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "oeem/synth.hpp"

namespace oeem {

struct ClassScores {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double iou = 0.0;
  double dice = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // pixel-level
  // Class absent from both predictions and ground truth; scores set to 1.
  bool absent = false;
};

struct EvalReport {
  std::vector<ClassScores> classes;
  double miou = 0.0;
  double mean_dice = 0.0;
  double mean_f1 = 0.0;
};

// Confusion counts accumulated over all pairs (global, not per image);
// pixels whose ground truth is ignore are skipped.
EvalReport evaluate(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                    std::size_t classes);

// Columns: class,tp,fp,fn,iou,dice,precision,recall,f1,absent; last row "mean".
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);
void print_report(std::ostream& os, const EvalReport& report);

}  // namespace oeem

#endif  // OEEM_METRICS_HPP_
