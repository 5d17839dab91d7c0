#include "oeem/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "oeem/cam.hpp"
#include "oeem/classifier.hpp"
#include "oeem/dataset_io.hpp"
#include "oeem/errors.hpp"
#include "oeem/infer.hpp"
#include "oeem/png_io.hpp"
#include "oeem/rng.hpp"
#include "oeem/segnet.hpp"

namespace fs = std::filesystem;

namespace oeem {

namespace {

constexpr std::size_t kClasses = 2;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

fs::path out_dir(const ExperimentConfig& cfg) { return cfg.str("out_dir"); }

fs::path pseudo_dir(const ExperimentConfig& cfg) {
  const std::string p = cfg.str("pseudo_dir");
  return p.empty() ? out_dir(cfg) / "pseudo" : fs::path(p);
}

std::vector<PatchRecord> load_patch_records(const ExperimentConfig& cfg) {
  const fs::path csv = fs::path(cfg.str("data_dir")) / "patches.csv";
  if (!fs::exists(csv)) {
    throw IoError("missing " + csv.string() + " (run `oeem synth` first or set data_dir)");
  }
  return read_patches_csv(csv);
}

TrainConfig train_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.lr = cfg.real("seg.lr");
  tc.iterations = cfg.count("seg.iterations");
  tc.batch = cfg.count("seg.batch");
  tc.poly_power = cfg.real("seg.poly_power");
  tc.momentum = cfg.real("seg.momentum");
  tc.crop = cfg.count("seg.crop");
  tc.seed = stage_seed(cfg.u64("seed"), "seg");
  tc.mining = parse_mining_mode(cfg.str("mining"));
  tc.ohem_keep_fraction = cfg.real("ohem.keep_fraction");
  const std::string scope = cfg.str("lnorm.scope");
  if (scope == "crop") {
    tc.norm_scope = NormScope::kCrop;
  } else if (scope == "batch") {
    tc.norm_scope = NormScope::kBatch;
  } else {
    throw ConfigError("lnorm.scope must be crop or batch, got '" + scope + "'");
  }
  return tc;
}

}  // namespace

std::uint64_t stage_seed(std::uint64_t root, const char* stage) {
  return Rng(root).split(stage).seed();
}

SynthConfig synth_config(const ExperimentConfig& cfg) {
  SynthConfig sc;
  sc.image_count = cfg.count("synth.image_count");
  sc.image_side = cfg.count("synth.image_side");
  sc.contrast_gap = cfg.real("synth.contrast_gap");
  sc.smoothness = cfg.real("synth.smoothness");
  sc.seed = stage_seed(cfg.u64("seed"), "synth");
  sc.validate();
  return sc;
}

SynthSummary cmd_synth(const ExperimentConfig& cfg, bool force, std::ostream& log) {
  const SynthConfig sc = synth_config(cfg);
  const std::size_t side = cfg.count("patch.side");
  const std::size_t stride = cfg.count("patch.stride");
  const double min_presence = cfg.real("patch.min_presence");
  if (side == 0 || side > sc.image_side) throw ConfigError("patch.side must be in [1, image side]");
  if (stride == 0) throw ConfigError("patch.stride must be >= 1");

  const fs::path dir = cfg.str("data_dir");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) {
      throw ConfigError("output directory " + dir.string() +
                        " exists and is not empty (pass --force to replace it)");
    }
    fs::remove_all(dir);
  }

  const Dataset ds = generate_dataset(sc);
  std::vector<PatchRecord> records;
  for (std::size_t id : ds.train_ids) {
    for (auto& p : crop_patches(ds.images[id], ds.masks[id], id, side, stride, min_presence,
                                kClasses)) {
      records.push_back(p.record);
    }
  }
  save_dataset(dir, ds, records);
  cfg.write_resolved(out_dir(cfg) / "config.resolved");

  SynthSummary s;
  s.train_images = ds.train_ids.size();
  s.test_images = ds.test_ids.size();
  s.patches = records.size();
  std::size_t gland = 0, total = 0;
  for (const LabelMap& m : ds.masks) {
    gland += static_cast<std::size_t>(std::count(m.labels().begin(), m.labels().end(),
                                                  static_cast<std::uint8_t>(kGland)));
    total += m.size();
  }
  s.gland_fraction = static_cast<double>(gland) / static_cast<double>(total);
  std::map<std::string, std::size_t> by_label;
  for (const auto& r : records) {
    ++by_label[r.label.to_bits(kClasses)];
    if (r.label.count() == 1) ++s.single_class_patches;
  }
  log << "synth: " << s.train_images << " train / " << s.test_images << " test images in "
      << dir.string() << "\n";
  log << "synth: gland pixel fraction " << fmt6(s.gland_fraction) << "\n";
  log << "synth: " << s.patches << " training patches (side " << side << ", stride " << stride
      << ")";
  for (const auto& [bits, n] : by_label) log << ", label " << bits << ": " << n;
  log << "\n";
  return s;
}

PseudoSummary cmd_pseudo(const ExperimentConfig& cfg, std::ostream& log) {
  const Dataset ds = load_dataset(cfg.str("data_dir"), kClasses);
  const auto records = load_patch_records(cfg);
  if (records.empty()) throw Error("patches.csv lists no patches");

  std::vector<Tensor> patches;
  std::vector<PatchLabel> labels;
  std::map<std::size_t, std::vector<PatchRecord>> by_image;
  for (const auto& r : records) {
    if (r.image_id >= ds.images.size() || ds.images[r.image_id].empty()) {
      throw IoError("patches.csv references missing image " + std::to_string(r.image_id));
    }
    patches.push_back(crop(ds.images[r.image_id], r.row, r.col, r.side, r.side));
    labels.push_back(r.label);
    by_image[r.image_id].push_back(r);
  }

  ClassifierHp hp;
  hp.lr = cfg.real("cls.lr");
  hp.epochs = cfg.count("cls.epochs");
  hp.batch = cfg.count("cls.batch");
  hp.poly_power = cfg.real("cls.poly_power");
  hp.momentum = cfg.real("cls.momentum");
  hp.seed = stage_seed(cfg.u64("seed"), "cls");
  log << "pseudo: training classifier on " << patches.size() << " patches, " << hp.epochs
      << " epochs\n";
  const ClassifierTraining trained = train_classifier(patches, labels, hp);

  const fs::path out = out_dir(cfg);
  {
    auto os = open_out(out / "cls_loss.csv");
    os << "epoch,loss\n";
    for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
      os << e << ',' << fmt6(trained.epoch_loss[e]) << '\n';
    }
  }

  PseudoSummary s;
  s.classifier_accuracy = multilabel_accuracy(trained.net, patches, labels);
  log << "pseudo: classifier multi-label accuracy " << fmt6(s.classifier_accuracy) << "\n";

  PseudoOptions opts;
  opts.scales = cfg.reals("cam.scales");
  const fs::path pdir = pseudo_dir(cfg);
  std::vector<LabelMap> preds, cam_preds, gts;
  for (const auto& [id, recs] : by_image) {
    const ImagePseudo ip = image_pseudomask(trained.net, ds.images[id], recs, opts);
    write_mask(pdir / image_file_name(id), ip.mask);
    for (std::size_t c = 0; c < ip.cam.channels(); ++c) {
      const std::string stem = image_file_name(id).substr(0, 3);
      const Tensor plane({ip.cam.height(), ip.cam.width()},
                         std::vector<double>(ip.cam.plane(c).begin(), ip.cam.plane(c).end()));
      write_gray(out / "cam" / (stem + "_c" + std::to_string(c) + ".png"), plane);
    }
    for (std::size_t p = 0; p < ip.mask.size(); ++p) {
      if (!ip.label.has(ip.mask[p])) ++s.absent_class_pixels;
    }
    preds.push_back(ip.mask);
    cam_preds.push_back(ip.cam_mask);
    gts.push_back(ds.masks[id]);
  }
  s.cam_eval = evaluate(cam_preds, gts, kClasses);
  s.pseudo_eval = evaluate(preds, gts, kClasses);
  write_eval_csv(out / "cam_eval.csv", s.cam_eval);
  write_eval_csv(out / "pseudo_eval.csv", s.pseudo_eval);
  cfg.write_resolved(out / "config.resolved");

  log << "pseudo: wrote " << preds.size() << " pseudo-masks to " << pdir.string() << "\n";
  log << "pseudo: train mIoU  CAM " << fmt6(s.cam_eval.miou) << "  pseudo-mask "
      << fmt6(s.pseudo_eval.miou) << "\n";
  log << "pseudo: pixels carrying an absent class: " << s.absent_class_pixels << "\n";
  return s;
}

EvalReport cmd_train(const ExperimentConfig& cfg, std::ostream& log, const fs::path& run_dir) {
  const fs::path dir = run_dir.empty() ? out_dir(cfg) : run_dir;
  TrainConfig tc = train_config(cfg);
  const std::string supervision = cfg.str("supervision");
  if (supervision != "pseudo" && supervision != "gt") {
    throw ConfigError("supervision must be pseudo or gt, got '" + supervision + "'");
  }
  const std::vector<double> scales = cfg.reals("infer.scales");
  const std::size_t infer_crop = cfg.count("infer.crop");
  const std::size_t infer_stride = cfg.count("infer.stride");
  if (infer_crop == 0 || infer_stride == 0) {
    throw ConfigError("infer.crop and infer.stride must be >= 1");
  }
  const double noise = cfg.real("pseudo.noise");
  if (noise < 0.0 || noise > 1.0) throw ConfigError("pseudo.noise must be in [0, 1]");

  const Dataset ds = load_dataset(cfg.str("data_dir"), kClasses);
  std::vector<Tensor> images;
  std::vector<LabelMap> masks;
  const Rng noise_rng(stage_seed(cfg.u64("seed"), "noise"));
  for (std::size_t id : ds.train_ids) {
    images.push_back(ds.images[id]);
    if (supervision == "gt") {
      masks.push_back(ds.masks[id]);
      continue;
    }
    const fs::path p = pseudo_dir(cfg) / image_file_name(id);
    if (!fs::exists(p)) {
      throw IoError("missing pseudo-mask " + p.string() +
                    " (run `oeem pseudo` first, or use --supervision gt)");
    }
    LabelMap m = read_mask(p, kClasses);
    if (noise > 0.0) {
      Rng r = noise_rng.split(id);
      m = corrupt_boundary(m, noise, cfg.count("pseudo.noise_band"), kClasses, r);
    }
    masks.push_back(std::move(m));
  }

  log << "train: mining=" << to_string(tc.mining) << " supervision=" << supervision
      << " seed=" << cfg.u64("seed") << " iterations=" << tc.iterations << "\n";
  const SegTraining trained = train_seg(images, masks, tc);
  {
    auto os = open_out(dir / "seg_loss.csv");
    os << "iteration,loss\n";
    for (std::size_t i = 0; i < trained.loss_curve.size(); ++i) {
      os << i << ',' << fmt6(trained.loss_curve[i]) << '\n';
    }
  }

  std::vector<LabelMap> preds, gts;
  for (std::size_t id : ds.test_ids) {
    const Tensor probs = sliding_infer(trained.net, ds.images[id], infer_crop, infer_stride, scales);
    LabelMap pred = argmax_mask(probs);
    write_mask(dir / "pred" / image_file_name(id), pred);
    preds.push_back(std::move(pred));
    gts.push_back(ds.masks[id]);
  }
  const EvalReport report = evaluate(preds, gts, kClasses);
  write_eval_csv(dir / "eval.csv", report);
  cfg.write_resolved(dir / "config.resolved");
  print_report(log, report);
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, std::ostream& log) {
  const std::size_t k = cfg.count("ablate.seeds");
  if (k == 0) throw ConfigError("ablate.seeds must be >= 1");
  const std::uint64_t root = cfg.u64("seed");
  const fs::path out = out_dir(cfg);
  std::vector<AblationRow> rows;
  for (MiningMode mode : kAllMiningModes) {
    for (std::size_t i = 0; i < k; ++i) {
      ExperimentConfig run = cfg;
      run.set("seed", std::to_string(root + i));
      run.set("mining", std::string(to_string(mode)));
      const fs::path run_dir =
          out / "ablate" / std::string(to_string(mode)) / ("seed_" + std::to_string(root + i));
      rows.push_back({mode, root + i, cmd_train(run, log, run_dir)});
    }
  }

  auto os = open_out(out / "ablation.csv");
  os << "mode,seed,miou,dice,f1\n";
  for (const auto& r : rows) {
    os << to_string(r.mode) << ',' << r.seed << ',' << fmt6(r.report.miou) << ','
       << fmt6(r.report.mean_dice) << ',' << fmt6(r.report.mean_f1) << '\n';
  }
  auto ss = open_out(out / "ablation_summary.csv");
  ss << "mode,runs,median_miou,median_dice,median_f1\n";
  log << "mode      median mIoU  median Dice  median F1\n";
  for (MiningMode mode : kAllMiningModes) {
    std::vector<double> miou, dice, f1;
    for (const auto& r : rows) {
      if (r.mode != mode) continue;
      miou.push_back(r.report.miou);
      dice.push_back(r.report.mean_dice);
      f1.push_back(r.report.mean_f1);
    }
    ss << to_string(mode) << ',' << miou.size() << ',' << fmt6(median(miou)) << ','
       << fmt6(median(dice)) << ',' << fmt6(median(f1)) << '\n';
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s  %11.4f  %11.4f  %9.4f\n",
                  std::string(to_string(mode)).c_str(), median(miou), median(dice), median(f1));
    log << buf;
  }
  cfg.write_resolved(out / "config.resolved");
  return rows;
}

int cmd_gradcheck(double tolerance, std::ostream& log) {
  const auto results = run_gradcheck_suite(tolerance);
  bool ok = true;
  for (const auto& r : results) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-28s max rel err %.3e  %s\n", r.name.c_str(), r.max_rel_error,
                  r.passed ? "ok" : "FAIL");
    log << buf;
    ok = ok && r.passed;
  }
  log << (ok ? "gradcheck: all checks passed" : "gradcheck: FAILED") << " (tolerance "
      << tolerance << ")\n";
  return ok ? 0 : 2;
}

}  // namespace oeem
