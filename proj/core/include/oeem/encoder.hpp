#ifndef OEEM_ENCODER_HPP_
#define OEEM_ENCODER_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "oeem/params.hpp"
#include "oeem/rng.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Per-channel input standardization applied in front of both networks.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  Tensor apply(const Tensor& image) const;
  static Normalizer identity(std::size_t channels);
  // Channel statistics over a set of C x H x W images.
  static Normalizer fit(const std::vector<const Tensor*>& images);
};

// Three conv3x3 -> ReLU -> 2x2 average-pool stages. Shared by the patch
// classifier and the segmentation net; each owner registers the parameters
// into its own ParamStore under a name prefix.
class Encoder {
 public:
  static constexpr std::size_t kStages = 3;
  // Smallest input extent that survives three 2x poolings.
  static constexpr std::size_t kMinExtent = 8;

  Encoder() = default;
  Encoder(ParamStore& params, const std::string& prefix, std::size_t in_channels,
          std::array<std::size_t, kStages> widths, Rng& rng);

  struct Trace {
    std::array<Tensor, kStages> input;
    std::array<Tensor, kStages> pre_activation;
    std::array<Tensor, kStages> output;  // after pooling
  };

  Trace forward(const ParamStore& params, const Tensor& x) const;

  // Accumulates parameter gradients into `params`. `grad_outputs[s]` is the
  // gradient w.r.t. stage s's pooled output, or an empty Tensor for none.
  // Returns the gradient w.r.t. the encoder input.
  Tensor backward(ParamStore& params, const Trace& trace,
                  std::array<Tensor, kStages> grad_outputs) const;

  const std::array<std::size_t, kStages>& widths() const { return widths_; }

  // All stage outputs resized to stage 0's extent and concatenated.
  static Tensor fuse(const Trace& trace);
  static std::array<Tensor, kStages> fuse_backward(const Trace& trace, const Tensor& grad_fused);

 private:
  std::array<std::size_t, kStages> widths_{};
  std::array<std::size_t, kStages> kernel_{};
  std::array<std::size_t, kStages> bias_{};
};

}  // namespace oeem

#endif  // OEEM_ENCODER_HPP_
