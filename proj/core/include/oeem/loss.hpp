#ifndef OEEM_LOSS_HPP_
#define OEEM_LOSS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Example-mining losses for segmentation under noisy pseudo-masks.
//
// All losses are means over the non-ignore pixels of one C x H x W logit map.
// A weight map W (H x W, non-negative) rescales each pixel's cross-entropy:
//
//   loss = (1/N) * sum_p W_p * CE_p,     dloss/dlogits_p = W_p * (softmax_p - onehot_p) / N
//
// Weights are always treated as constants in the backward pass, including
// the loss-derived ones that are recomputed from the current logits.

enum class MiningMode { kNone, kOhem, kCMax, kCDiff, kLNorm, kLcMix };

inline constexpr std::array<MiningMode, 6> kAllMiningModes = {
    MiningMode::kNone, MiningMode::kOhem,  MiningMode::kCMax,
    MiningMode::kCDiff, MiningMode::kLNorm, MiningMode::kLcMix};

std::string_view to_string(MiningMode mode);
// Accepts none|ohem|c_max|c_diff|l_norm|lc_mix; throws ConfigError otherwise,
// listing the valid names.
MiningMode parse_mining_mode(std::string_view name);

// Per-pixel cross-entropy. Ignore pixels carry loss 0 and valid = 0 and are
// excluded from every statistic downstream.
struct LossMap {
  Tensor loss;                      // H x W
  std::vector<std::uint8_t> valid;  // 1 where the pixel counts
  std::size_t valid_count = 0;
};

LossMap pixel_ce(const Tensor& logits, const LabelMap& gt);

// Max softmax confidence per pixel, in (1/C, 1].
Tensor w_c_max(const Tensor& logits);
// Max minus min softmax confidence per pixel, in [0, 1).
Tensor w_c_diff(const Tensor& logits);

// Normalized loss: softmax over the valid pixels of -L divided by its mean,
// i.e. N * softmax(-L). Strictly decreasing in L, mean exactly one (up to
// rounding), invariant to adding a constant to L. Ignore pixels get 0.
Tensor w_l_norm(const LossMap& loss);
// Same normalization taken jointly over several maps (one softmax over the
// union of their valid pixels). Used for the experimental per-batch scope.
std::vector<Tensor> w_l_norm_joint(std::span<const LossMap> losses);

// w_l_norm(loss) * w_c_max(logits), elementwise.
Tensor w_lc_mix(const LossMap& loss, const Tensor& logits);

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // same shape as logits
};

// Unweighted mean cross-entropy.
LossAndGrad plain_ce(const Tensor& logits, const LabelMap& gt);
LossAndGrad weighted_ce(const Tensor& logits, const LabelMap& gt, const Tensor& weights);

// Mean CE over the ceil(keep_fraction * N) highest-loss valid pixels; ties
// at the cut go to the earlier pixel in row-major order. Unselected pixels
// get zero gradient.
LossAndGrad ohem_loss(const Tensor& logits, const LabelMap& gt, double keep_fraction);

struct MiningOptions {
  double ohem_keep_fraction = 0.25;
};

// Detached weight map a mode would apply to this crop. For kOhem this is
// N / k on the k selected pixels, so weighted_ce reproduces ohem_loss.
Tensor mining_weights(const Tensor& logits, const LabelMap& gt, MiningMode mode,
                      const MiningOptions& opts = {});

// Loss switch: a crop whose label has a single class uses plain CE whatever
// the mode; otherwise the mode's reweighting applies, with loss-based
// weights computed from the current logits.
LossAndGrad mining_loss(const Tensor& logits, const LabelMap& gt, const PatchLabel& label,
                        MiningMode mode, const MiningOptions& opts = {});

}  // namespace oeem

#endif  // OEEM_LOSS_HPP_
