#ifndef OEEM_OPS_HPP_
#define OEEM_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "oeem/tensor.hpp"

namespace oeem {

// Softmax over the channel axis of a C x H x W tensor, per pixel.
// Uses max subtraction, so large logits do not overflow.
Tensor softmax_channel(const Tensor& logits);
Tensor log_softmax_channel(const Tensor& logits);
// Vector-Jacobian product of softmax_channel given its output `probs`.
Tensor softmax_channel_backward(const Tensor& probs, const Tensor& grad_output);

// Softmax over every element of the tensor, treated as one flat vector.
Tensor softmax_flat(const Tensor& values);
std::vector<double> softmax_flat(std::span<const double> values);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;
};

// Cross-correlation of a C x H x W input with an O x C x kh x kw kernel.
// Output extent per axis: floor((in + 2 * pad - k) / stride) + 1.
// `bias` is either empty or holds O values.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t pad);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                            std::size_t stride, std::size_t pad,
                            const Tensor& grad_output);

// Bilinear resampling of a C x H x W tensor with the align-corners-false
// convention: output pixel d samples input coordinate
//   s = (d + 0.5) * in / out - 0.5,
// clamped to [0, in - 1], then linearly interpolated between floor(s) and
// floor(s) + 1. Interpolation is written as a + t * (b - a), so constant
// inputs are preserved exactly and same-size resizes are bit-identical.
Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w);
Tensor bilinear_resize_backward(const Tensor& grad_output, std::size_t in_h,
                                std::size_t in_w);

// 2x2 average pooling with stride 2; trailing odd rows/columns are dropped.
Tensor avg_pool2(const Tensor& input);
Tensor avg_pool2_backward(const Tensor& grad_output, std::size_t in_h, std::size_t in_w);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output);

Tensor concat_channels(std::span<const Tensor* const> parts);
// Inverse of concat_channels for gradients: splits by the given channel counts.
std::vector<Tensor> split_channels(const Tensor& input, std::span<const std::size_t> counts);

double sigmoid(double x);
// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);

}  // namespace oeem

#endif  // OEEM_OPS_HPP_
