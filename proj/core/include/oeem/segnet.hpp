#ifndef OEEM_SEGNET_HPP_
#define OEEM_SEGNET_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oeem/encoder.hpp"
#include "oeem/loss.hpp"
#include "oeem/params.hpp"
#include "oeem/rng.hpp"
#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Encoder (8, 16, 32) -> 1x1 classifier at 1/8 resolution -> bilinear
// upsample back to the input extent.
struct SegNet {
  static constexpr std::array<std::size_t, 3> kWidths = {8, 16, 32};
  static constexpr std::size_t kFusedChannels = kWidths[0] + kWidths[1] + kWidths[2];

  std::size_t classes = 2;
  ParamStore params;
  Encoder encoder;
  std::size_t head_weight = 0;  // classes x fused_channels x 1 x 1
  std::size_t head_bias = 0;
  Normalizer normalizer;

  struct Trace {
    Encoder::Trace encoder;
    Tensor fused;   // stage outputs at stage-0 resolution, concatenated
    Tensor coarse;  // logits before upsampling
  };

  // Logits, classes x H x W.
  Tensor forward(const Tensor& image, Trace* trace = nullptr) const;
  // Accumulates parameter gradients for d(loss)/d(logits) = grad_logits.
  void backward(const Trace& trace, const Tensor& grad_logits);
};

SegNet make_segnet(std::size_t classes, std::size_t in_channels, Rng& rng);

enum class NormScope { kCrop, kBatch };

struct TrainConfig {
  double lr = 5e-3;
  std::size_t iterations = 300;
  std::size_t batch = 8;
  double poly_power = 0.9;
  double momentum = 0.9;
  std::size_t crop = 64;
  std::uint64_t seed = 1;
  MiningMode mining = MiningMode::kNone;
  double ohem_keep_fraction = 0.25;
  // kBatch normalizes the loss-based weights over all multi-class crops of a
  // batch jointly instead of per crop (experimental).
  NormScope norm_scope = NormScope::kCrop;

  void validate(std::size_t image_side) const;
};

struct SegTraining {
  SegNet net;
  std::vector<double> loss_curve;  // mean batch loss per iteration
};

// Random crop + flips per sample; each crop's class set (for the loss
// switch) is recomputed from its supervision mask. Masks may contain
// kIgnoreLabel. Throws NumericError on a non-finite loss.
SegTraining train_seg(std::span<const Tensor> images, std::span<const LabelMap> masks,
                      const TrainConfig& cfg);

}  // namespace oeem

#endif  // OEEM_SEGNET_HPP_
