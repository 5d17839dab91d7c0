#ifndef OEEM_EXPERIMENT_HPP_
#define OEEM_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oeem/config.hpp"
#include "oeem/gradcheck_suite.hpp"
#include "oeem/loss.hpp"
#include "oeem/metrics.hpp"
#include "oeem/synth.hpp"

namespace oeem {

// Stage seeds are derived from the root seed by name ("synth", "cls",
// "seg", "noise") so each stage can be rerun on its own.
std::uint64_t stage_seed(std::uint64_t root, const char* stage);

SynthConfig synth_config(const ExperimentConfig& cfg);

struct SynthSummary {
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  std::size_t patches = 0;
  std::size_t single_class_patches = 0;
  double gland_fraction = 0.0;
};

// Writes the dataset to data_dir. Refuses (ConfigError) if data_dir exists
// and is non-empty unless `force`, in which case it is replaced.
SynthSummary cmd_synth(const ExperimentConfig& cfg, bool force, std::ostream& log);

struct PseudoSummary {
  double classifier_accuracy = 0.0;
  EvalReport cam_eval;     // argmax of unrefined stitched CAMs vs GT
  EvalReport pseudo_eval;  // refined pseudo-masks vs GT
  std::size_t absent_class_pixels = 0;
};

// Trains the classifier on patches.csv, writes <out>/pseudo/NNN.png,
// <out>/cam/NNN_c<k>.png, <out>/cls_loss.csv and <out>/pseudo_eval.csv.
PseudoSummary cmd_pseudo(const ExperimentConfig& cfg, std::ostream& log);

// Trains the segmentation net (seed, mining and supervision from cfg),
// predicts the test split and writes pred/, eval.csv and seg_loss.csv under
// `run_dir` (default: out_dir).
EvalReport cmd_train(const ExperimentConfig& cfg, std::ostream& log,
                     const std::filesystem::path& run_dir = {});

struct AblationRow {
  MiningMode mode;
  std::uint64_t seed;
  EvalReport report;
};

// Every mining mode over seeds seed, seed+1, ..., seed+K-1. Writes
// <out>/ablation.csv (one row per run) and <out>/ablation_summary.csv (one
// row per mode, medians).
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, std::ostream& log);

// Returns the process exit code: 0 if every check is below tolerance, 2 otherwise.
int cmd_gradcheck(double tolerance, std::ostream& log);

double median(std::vector<double> values);

}  // namespace oeem

#endif  // OEEM_EXPERIMENT_HPP_
