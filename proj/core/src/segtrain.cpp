#include "oeem/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oeem/errors.hpp"
#include "oeem/optim.hpp"

namespace oeem {

void TrainConfig::validate(std::size_t image_side) const {
  if (!(lr > 0.0)) throw ConfigError("seg.lr must be > 0");
  if (batch == 0) throw ConfigError("seg.batch must be >= 1");
  if (crop < Encoder::kMinExtent) throw ConfigError("seg.crop must be >= 8");
  if (crop > image_side) throw ConfigError("seg.crop must not exceed the image side");
  if (!(ohem_keep_fraction > 0.0) || ohem_keep_fraction > 1.0) {
    throw ConfigError("ohem.keep_fraction must be in (0, 1]");
  }
}

namespace {

struct Sample {
  Tensor image;
  LabelMap mask;
  PatchLabel label;
  SegNet::Trace trace;
  Tensor logits;
};

}  // namespace

SegTraining train_seg(std::span<const Tensor> images, std::span<const LabelMap> masks,
                      const TrainConfig& cfg) {
  if (images.empty() || images.size() != masks.size()) {
    throw Error("train_seg: need matching, non-empty image and mask lists");
  }
  std::size_t min_side = images.front().height();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != masks[i].height() || images[i].width() != masks[i].width()) {
      throw ShapeError("train_seg: mask extents differ from image " + std::to_string(i));
    }
    min_side = std::min({min_side, images[i].height(), images[i].width()});
  }
  cfg.validate(min_side);

  Rng root(cfg.seed);
  Rng init_rng = root.split("init");
  Rng data_rng = root.split("data");
  const std::size_t classes = 2;
  SegTraining out{make_segnet(classes, images.front().channels(), init_rng), {}};
  SegNet& net = out.net;
  if (cfg.iterations == 0) return out;

  std::vector<const Tensor*> ptrs;
  for (const Tensor& img : images) ptrs.push_back(&img);
  net.normalizer = Normalizer::fit(ptrs);

  const MiningOptions mopts{cfg.ohem_keep_fraction};
  const bool joint = cfg.norm_scope == NormScope::kBatch &&
                     (cfg.mining == MiningMode::kLNorm || cfg.mining == MiningMode::kLcMix);
  Sgd sgd(net.params, cfg.momentum);
  const double scale = 1.0 / static_cast<double>(cfg.batch);

  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const double lr = poly_lr(cfg.lr, iter, cfg.iterations, cfg.poly_power);
    net.params.zero_grad();
    std::vector<Sample> batch(cfg.batch);
    for (Sample& s : batch) {
      const std::size_t idx = data_rng.below(images.size());
      const Tensor& img = images[idx];
      const std::size_t row = data_rng.below(img.height() - cfg.crop + 1);
      const std::size_t col = data_rng.below(img.width() - cfg.crop + 1);
      s.image = crop(img, row, col, cfg.crop, cfg.crop);
      s.mask = crop(masks[idx], row, col, cfg.crop, cfg.crop);
      if (data_rng.bernoulli(0.5)) {
        s.image = flip_horizontal(s.image);
        s.mask = flip_horizontal(s.mask);
      }
      if (data_rng.bernoulli(0.5)) {
        s.image = flip_vertical(s.image);
        s.mask = flip_vertical(s.mask);
      }
      s.label = presence_label(s.mask, classes);
      s.logits = net.forward(s.image, &s.trace);
    }

    std::vector<Tensor> joint_weights;
    std::vector<std::size_t> joint_members;
    if (joint) {
      std::vector<LossMap> maps;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].label.count() < 2) continue;
        maps.push_back(pixel_ce(batch[b].logits, batch[b].mask));
        joint_members.push_back(b);
      }
      if (!maps.empty()) joint_weights = w_l_norm_joint(maps);
      if (cfg.mining == MiningMode::kLcMix) {
        for (std::size_t j = 0; j < joint_members.size(); ++j) {
          const Tensor conf = w_c_max(batch[joint_members[j]].logits);
          for (std::size_t i = 0; i < conf.size(); ++i) joint_weights[j][i] *= conf[i];
        }
      }
    }

    double batch_loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Sample& s = batch[b];
      LossAndGrad lg;
      const auto it = std::find(joint_members.begin(), joint_members.end(), b);
      if (it != joint_members.end()) {
        lg = weighted_ce(s.logits, s.mask, joint_weights[static_cast<std::size_t>(it - joint_members.begin())]);
      } else if (s.label.count() == 0) {
        lg = plain_ce(s.logits, s.mask);
      } else {
        lg = mining_loss(s.logits, s.mask, s.label, cfg.mining, mopts);
      }
      batch_loss += lg.loss;
      lg.grad *= scale;
      net.backward(s.trace, lg.grad);
    }
    batch_loss *= scale;
    if (!std::isfinite(batch_loss)) {
      std::ostringstream os;
      os << "segmentation loss is not finite at iteration " << iter << " (lr " << lr
         << ", loss " << batch_loss << ")";
      throw NumericError(os.str());
    }
    out.loss_curve.push_back(batch_loss);
    sgd.step(net.params, lr);
  }
  if (!net.params.values_finite()) throw NumericError("segmentation parameters diverged");
  return out;
}

}  // namespace oeem
