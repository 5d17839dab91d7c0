// Command-line front end: synth, pseudo, train, ablate, gradcheck.
// Exit codes: 0 success, 1 validation or I/O error, 2 numeric failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oeem/config.hpp"
#include "oeem/errors.hpp"
#include "oeem/experiment.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mining;
  std::string supervision;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
  double tolerance = 1e-5;
};

oeem::ExperimentConfig load_config(const Flags& f) {
  oeem::ExperimentConfig cfg =
      f.config_path.empty() ? oeem::ExperimentConfig{} : oeem::ExperimentConfig::from_file(f.config_path);
  for (const std::string& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw oeem::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (!f.mining.empty()) {
    oeem::parse_mining_mode(f.mining);
    cfg.set("mining", f.mining);
  }
  if (!f.supervision.empty()) cfg.set("supervision", f.supervision);
  if (!f.out.empty()) cfg.set("out_dir", f.out);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OEEM desk-scale experiments on synthetic histology-like images"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "root seed (overrides config)");
    sub->add_option("--out", f.out, "output directory (overrides out_dir)");
    sub->add_option("--set", f.overrides, "extra key=value override, repeatable");
  };

  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset and patches.csv");
  add_common(synth);
  synth->add_flag("--force", f.force, "replace a non-empty data directory");

  auto* pseudo = app.add_subcommand("pseudo", "train the patch classifier and write pseudo-masks");
  add_common(pseudo);

  auto* train = app.add_subcommand("train", "train the segmentation net and evaluate on the test set");
  add_common(train);
  train->add_option("--mining", f.mining, "none|ohem|c_max|c_diff|l_norm|lc_mix");
  train->add_option("--supervision", f.supervision, "pseudo|gt")
      ->check(CLI::IsMember({"pseudo", "gt"}));

  auto* ablate = app.add_subcommand("ablate", "run every mining mode over several seeds");
  add_common(ablate);
  ablate->add_option("--supervision", f.supervision, "pseudo|gt")
      ->check(CLI::IsMember({"pseudo", "gt"}));

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  gradcheck->add_option("--tolerance", f.tolerance, "max relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gradcheck->parsed()) return oeem::cmd_gradcheck(f.tolerance, std::cout);
    const oeem::ExperimentConfig cfg = load_config(f);
    if (synth->parsed()) {
      oeem::cmd_synth(cfg, f.force, std::cout);
    } else if (pseudo->parsed()) {
      oeem::cmd_pseudo(cfg, std::cout);
    } else if (train->parsed()) {
      oeem::cmd_train(cfg, std::cout);
    } else if (ablate->parsed()) {
      oeem::cmd_ablate(cfg, std::cout);
    }
    return 0;
  } catch (const oeem::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
