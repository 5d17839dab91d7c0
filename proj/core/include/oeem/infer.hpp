#ifndef OEEM_INFER_HPP_
#define OEEM_INFER_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "oeem/segnet.hpp"
#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Multi-scale sliding-window inference. For each scale the image is resized,
// tiled with square windows of side min(crop, scaled extent) at `stride`
// (last window clamped to the border), each tile's softmax probabilities are
// averaged over overlaps, and the result is resized back. The output is the
// mean over feasible scales, renormalized per pixel when more than one scale
// contributes. Scales whose resized extent is below the encoder minimum are
// infeasible; if all are, throws ShapeError.
Tensor sliding_infer(const SegNet& net, const Tensor& image, std::size_t crop, std::size_t stride,
                     std::span<const double> scales);

// Per-pixel argmax over channels, ties to the lowest index.
LabelMap argmax_mask(const Tensor& probs);

}  // namespace oeem

#endif  // OEEM_INFER_HPP_
