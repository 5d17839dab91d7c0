#include "oeem/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"

namespace oeem {

namespace {

void check_extents(const Tensor& logits, const LabelMap& gt) {
  require_rank(logits, 3, "loss logits");
  if (logits.height() != gt.height() || logits.width() != gt.width()) {
    throw ShapeError("logits " + shape_string(logits.shape()) + " and mask " +
                     std::to_string(gt.height()) + "x" + std::to_string(gt.width()) +
                     " extents differ");
  }
}

void check_weights(const Tensor& weights, const Tensor& logits) {
  if (weights.size() != logits.height() * logits.width()) {
    throw ShapeError("weight map " + shape_string(weights.shape()) +
                     " does not match logits " + shape_string(logits.shape()));
  }
}

Tensor confidence_extrema(const Tensor& logits, bool diff) {
  require_rank(logits, 3, "confidence weights");
  if (logits.channels() < 2) throw ShapeError("confidence weights need at least 2 channels");
  const Tensor p = softmax_channel(logits);
  const std::size_t hw = logits.height() * logits.width();
  Tensor w = Tensor::hw(logits.height(), logits.width());
  for (std::size_t i = 0; i < hw; ++i) {
    double hi = p[i], lo = p[i];
    for (std::size_t c = 1; c < logits.channels(); ++c) {
      hi = std::max(hi, p[c * hw + i]);
      lo = std::min(lo, p[c * hw + i]);
    }
    w[i] = diff ? hi - lo : hi;
  }
  return w;
}

// Shared body of plain and weighted CE; `weights` may be null.
LossAndGrad ce_impl(const Tensor& logits, const LabelMap& gt, const Tensor* weights) {
  check_extents(logits, gt);
  const std::size_t c_n = logits.channels();
  const std::size_t hw = logits.height() * logits.width();
  LossAndGrad out{0.0, Tensor(logits.shape())};
  std::size_t n = 0;
  for (std::size_t i = 0; i < hw; ++i) {
    if (gt[i] != kIgnoreLabel) ++n;
  }
  if (n == 0) return out;

  const Tensor logp = log_softmax_channel(logits);
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < hw; ++i) {
    const std::uint8_t y = gt[i];
    if (y == kIgnoreLabel) continue;
    if (y >= c_n) {
      throw ShapeError("mask class " + std::to_string(y) + " >= channel count " +
                       std::to_string(c_n));
    }
    const double w = weights ? (*weights)[i] : 1.0;
    if (weights) {
      sum += w * -logp[y * hw + i];
    } else {
      sum += -logp[y * hw + i];
    }
    if (w == 0.0) continue;
    const double scale = w * inv_n;
    for (std::size_t c = 0; c < c_n; ++c) {
      const double p = std::exp(logp[c * hw + i]);
      out.grad[c * hw + i] = scale * (p - (c == y ? 1.0 : 0.0));
    }
  }
  out.loss = sum / static_cast<double>(n);
  return out;
}

// Row-major indices of the k highest-loss valid pixels.
std::vector<std::size_t> ohem_selection(const LossMap& lm, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw ConfigError("ohem keep_fraction must be in (0, 1]");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < lm.valid.size(); ++i) {
    if (lm.valid[i]) idx.push_back(i);
  }
  if (idx.empty()) return idx;
  // Small slack so products like 0.1 * 30 = 3.0000000000000004 do not round up.
  auto k = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(idx.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, idx.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return lm.loss[a] > lm.loss[b];
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string_view to_string(MiningMode mode) {
  switch (mode) {
    case MiningMode::kNone: return "none";
    case MiningMode::kOhem: return "ohem";
    case MiningMode::kCMax: return "c_max";
    case MiningMode::kCDiff: return "c_diff";
    case MiningMode::kLNorm: return "l_norm";
    case MiningMode::kLcMix: return "lc_mix";
  }
  throw Error("unknown mining mode");
}

MiningMode parse_mining_mode(std::string_view name) {
  for (MiningMode m : kAllMiningModes) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("invalid mining mode '" + std::string(name) +
                    "' (valid: none, ohem, c_max, c_diff, l_norm, lc_mix)");
}

LossMap pixel_ce(const Tensor& logits, const LabelMap& gt) {
  check_extents(logits, gt);
  const std::size_t c_n = logits.channels();
  const std::size_t hw = logits.height() * logits.width();
  LossMap lm{Tensor::hw(logits.height(), logits.width()), std::vector<std::uint8_t>(hw, 0), 0};
  const Tensor logp = log_softmax_channel(logits);
  for (std::size_t i = 0; i < hw; ++i) {
    const std::uint8_t y = gt[i];
    if (y == kIgnoreLabel) continue;
    if (y >= c_n) {
      throw ShapeError("mask class " + std::to_string(y) + " >= channel count " +
                       std::to_string(c_n));
    }
    lm.loss[i] = -logp[y * hw + i];
    lm.valid[i] = 1;
    ++lm.valid_count;
  }
  return lm;
}

Tensor w_c_max(const Tensor& logits) { return confidence_extrema(logits, false); }

Tensor w_c_diff(const Tensor& logits) { return confidence_extrema(logits, true); }

std::vector<Tensor> w_l_norm_joint(std::span<const LossMap> losses) {
  std::size_t n = 0;
  double top = -std::numeric_limits<double>::infinity();
  for (const LossMap& lm : losses) {
    for (std::size_t i = 0; i < lm.valid.size(); ++i) {
      if (!lm.valid[i]) continue;
      ++n;
      top = std::max(top, -lm.loss[i]);
    }
  }
  if (n == 0) throw ShapeError("w_l_norm: empty loss map");

  std::vector<Tensor> out;
  double sum = 0.0;
  for (const LossMap& lm : losses) {
    Tensor e(lm.loss.shape());
    for (std::size_t i = 0; i < lm.valid.size(); ++i) {
      if (!lm.valid[i]) continue;
      e[i] = std::exp(-lm.loss[i] - top);
      sum += e[i];
    }
    out.push_back(std::move(e));
  }
  // softmax / mean(softmax) = e_i / (S / N) = e_i * (N / S).
  const double scale = static_cast<double>(n) / sum;
  for (Tensor& t : out) t *= scale;
  return out;
}

Tensor w_l_norm(const LossMap& loss) {
  return std::move(w_l_norm_joint(std::span<const LossMap>(&loss, 1)).front());
}

Tensor w_lc_mix(const LossMap& loss, const Tensor& logits) {
  if (loss.loss.size() != logits.height() * logits.width()) {
    throw ShapeError("w_lc_mix: loss map and logits extents differ");
  }
  Tensor w = w_l_norm(loss);
  const Tensor conf = w_c_max(logits);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= conf[i];
  return w;
}

LossAndGrad plain_ce(const Tensor& logits, const LabelMap& gt) {
  return ce_impl(logits, gt, nullptr);
}

LossAndGrad weighted_ce(const Tensor& logits, const LabelMap& gt, const Tensor& weights) {
  check_extents(logits, gt);
  check_weights(weights, logits);
  for (double w : weights.values()) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw NumericError("weighted_ce: weights must be finite and non-negative");
    }
  }
  return ce_impl(logits, gt, &weights);
}

LossAndGrad ohem_loss(const Tensor& logits, const LabelMap& gt, double keep_fraction) {
  const LossMap lm = pixel_ce(logits, gt);
  const auto sel = ohem_selection(lm, keep_fraction);
  LossAndGrad out{0.0, Tensor(logits.shape())};
  if (sel.empty()) return out;
  const std::size_t c_n = logits.channels();
  const std::size_t hw = logits.height() * logits.width();
  const double k = static_cast<double>(sel.size());
  const Tensor p = softmax_channel(logits);
  double sum = 0.0;
  for (std::size_t i : sel) {
    sum += lm.loss[i];
    for (std::size_t c = 0; c < c_n; ++c) {
      out.grad[c * hw + i] = (p[c * hw + i] - (c == gt[i] ? 1.0 : 0.0)) / k;
    }
  }
  out.loss = sum / k;
  return out;
}

Tensor mining_weights(const Tensor& logits, const LabelMap& gt, MiningMode mode,
                      const MiningOptions& opts) {
  check_extents(logits, gt);
  Tensor w;
  switch (mode) {
    case MiningMode::kNone:
      w = Tensor::hw(logits.height(), logits.width(), 1.0);
      break;
    case MiningMode::kOhem: {
      const LossMap lm = pixel_ce(logits, gt);
      const auto sel = ohem_selection(lm, opts.ohem_keep_fraction);
      w = Tensor::hw(logits.height(), logits.width());
      for (std::size_t i : sel) {
        w[i] = static_cast<double>(lm.valid_count) / static_cast<double>(sel.size());
      }
      break;
    }
    case MiningMode::kCMax:
      w = w_c_max(logits);
      break;
    case MiningMode::kCDiff:
      w = w_c_diff(logits);
      break;
    case MiningMode::kLNorm:
      w = w_l_norm(pixel_ce(logits, gt));
      break;
    case MiningMode::kLcMix:
      w = w_lc_mix(pixel_ce(logits, gt), logits);
      break;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (gt[i] == kIgnoreLabel) w[i] = 0.0;
  }
  return w;
}

LossAndGrad mining_loss(const Tensor& logits, const LabelMap& gt, const PatchLabel& label,
                        MiningMode mode, const MiningOptions& opts) {
  if (label.count() == 0) throw Error("mining_loss: label has no classes");
  if (label.count() == 1 || mode == MiningMode::kNone) return plain_ce(logits, gt);
  if (mode == MiningMode::kOhem) return ohem_loss(logits, gt, opts.ohem_keep_fraction);
  if ((mode == MiningMode::kLNorm || mode == MiningMode::kLcMix)) {
    // An all-ignore crop has nothing to normalize over.
    const LossMap lm = pixel_ce(logits, gt);
    if (lm.valid_count == 0) return plain_ce(logits, gt);
    const Tensor w = mode == MiningMode::kLNorm ? w_l_norm(lm) : w_lc_mix(lm, logits);
    return weighted_ce(logits, gt, w);
  }
  return weighted_ce(logits, gt, mining_weights(logits, gt, mode, opts));
}

}  // namespace oeem
