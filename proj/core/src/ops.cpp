#include "oeem/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

void require_nonempty(const Tensor& t) {
  if (t.empty()) throw ShapeError("empty input");
}

struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double t;
};

std::vector<AxisSample> axis_samples(std::size_t in, std::size_t out) {
  std::vector<AxisSample> s(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    s[d] = {lo, hi, src - static_cast<double>(lo)};
  }
  return s;
}

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k) {
    throw ShapeError("kernel extent " + std::to_string(k) + " exceeds padded input extent " +
                     std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

// Output indices [lo, hi) whose input tap o*stride - pad + k lies inside [0, in_n).
std::pair<std::size_t, std::size_t> valid_taps(std::size_t out_n, std::size_t in_n,
                                               std::size_t stride, std::size_t pad,
                                               std::size_t k) {
  const auto offset = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad);
  const auto st = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = offset >= 0 ? 0 : (-offset + st - 1) / st;
  const std::ptrdiff_t limit = static_cast<std::ptrdiff_t>(in_n) - offset;
  std::ptrdiff_t hi = limit <= 0 ? 0 : (limit + st - 1) / st;
  hi = std::min(hi, static_cast<std::ptrdiff_t>(out_n));
  lo = std::min(lo, hi);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Tensor softmax_channel(const Tensor& logits) {
  require_nonempty(logits);
  require_rank(logits, 3, "softmax_channel");
  const std::size_t c_n = logits.channels();
  const std::size_t hw = logits.height() * logits.width();
  Tensor out(logits.shape());
  for (std::size_t p = 0; p < hw; ++p) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < c_n; ++c) m = std::max(m, logits[c * hw + p]);
    double sum = 0.0;
    for (std::size_t c = 0; c < c_n; ++c) {
      const double e = std::exp(logits[c * hw + p] - m);
      out[c * hw + p] = e;
      sum += e;
    }
    for (std::size_t c = 0; c < c_n; ++c) out[c * hw + p] /= sum;
  }
  return out;
}

Tensor log_softmax_channel(const Tensor& logits) {
  require_nonempty(logits);
  require_rank(logits, 3, "log_softmax_channel");
  const std::size_t c_n = logits.channels();
  const std::size_t hw = logits.height() * logits.width();
  Tensor out(logits.shape());
  for (std::size_t p = 0; p < hw; ++p) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < c_n; ++c) m = std::max(m, logits[c * hw + p]);
    double sum = 0.0;
    for (std::size_t c = 0; c < c_n; ++c) sum += std::exp(logits[c * hw + p] - m);
    const double lse = m + std::log(sum);
    for (std::size_t c = 0; c < c_n; ++c) out[c * hw + p] = logits[c * hw + p] - lse;
  }
  return out;
}

Tensor softmax_channel_backward(const Tensor& probs, const Tensor& grad_output) {
  require_rank(probs, 3, "softmax_channel_backward");
  if (!probs.same_shape(grad_output)) throw ShapeError("softmax_channel_backward: shape mismatch");
  const std::size_t c_n = probs.channels();
  const std::size_t hw = probs.height() * probs.width();
  Tensor g(probs.shape());
  for (std::size_t p = 0; p < hw; ++p) {
    double dot = 0.0;
    for (std::size_t c = 0; c < c_n; ++c) dot += probs[c * hw + p] * grad_output[c * hw + p];
    for (std::size_t c = 0; c < c_n; ++c) {
      g[c * hw + p] = probs[c * hw + p] * (grad_output[c * hw + p] - dot);
    }
  }
  return g;
}

std::vector<double> softmax_flat(std::span<const double> values) {
  if (values.empty()) throw ShapeError("empty input");
  const double m = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Tensor softmax_flat(const Tensor& values) {
  require_nonempty(values);
  return Tensor(values.shape(), softmax_flat(values.values()));
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t pad) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t in_c = input.channels(), in_h = input.height(), in_w = input.width();
  const std::size_t out_c = kernel.dim(0), k_h = kernel.dim(2), k_w = kernel.dim(3);
  if (kernel.dim(1) != in_c) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels, got " + std::to_string(in_c));
  }
  if (!bias.empty() && bias.size() != out_c) {
    throw ShapeError("conv2d: bias length does not match output channels");
  }
  const std::size_t out_h = conv_extent(in_h, k_h, stride, pad);
  const std::size_t out_w = conv_extent(in_w, k_w, stride, pad);
  Tensor out = Tensor::chw(out_c, out_h, out_w);

  for (std::size_t o = 0; o < out_c; ++o) {
    double* dst = out.data() + o * out_h * out_w;
    if (!bias.empty()) std::fill(dst, dst + out_h * out_w, bias[o]);
    for (std::size_t c = 0; c < in_c; ++c) {
      const double* src = input.data() + c * in_h * in_w;
      for (std::size_t ki = 0; ki < k_h; ++ki) {
        for (std::size_t kj = 0; kj < k_w; ++kj) {
          const double w = kernel[((o * in_c + c) * k_h + ki) * k_w + kj];
          const auto [h_lo, h_hi] = valid_taps(out_h, in_h, stride, pad, ki);
          const auto [w_lo, w_hi] = valid_taps(out_w, in_w, stride, pad, kj);
          for (std::size_t oh = h_lo; oh < h_hi; ++oh) {
            const double* row = src + (oh * stride + ki - pad) * in_w;
            double* orow = dst + oh * out_w;
            if (stride == 1) {
              const double* shifted = row + w_lo + kj - pad;
              for (std::size_t ow = w_lo; ow < w_hi; ++ow) orow[ow] += w * shifted[ow - w_lo];
            } else {
              for (std::size_t ow = w_lo; ow < w_hi; ++ow) {
                orow[ow] += w * row[ow * stride + kj - pad];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, std::size_t stride,
                            std::size_t pad, const Tensor& grad_output) {
  require_rank(input, 3, "conv2d_backward input");
  require_rank(kernel, 4, "conv2d_backward kernel");
  require_rank(grad_output, 3, "conv2d_backward grad");
  const std::size_t in_c = input.channels(), in_h = input.height(), in_w = input.width();
  const std::size_t out_c = kernel.dim(0), k_h = kernel.dim(2), k_w = kernel.dim(3);
  if (kernel.dim(1) != in_c) throw ShapeError("conv2d_backward: channel mismatch");
  const std::size_t out_h = conv_extent(in_h, k_h, stride, pad);
  const std::size_t out_w = conv_extent(in_w, k_w, stride, pad);
  if (grad_output.channels() != out_c || grad_output.height() != out_h ||
      grad_output.width() != out_w) {
    throw ShapeError("conv2d_backward: upstream gradient has shape " +
                     shape_string(grad_output.shape()));
  }

  Conv2dGrads g{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({out_c})};
  for (std::size_t o = 0; o < out_c; ++o) {
    const double* go = grad_output.data() + o * out_h * out_w;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out_h * out_w; ++i) bsum += go[i];
    g.bias[o] = bsum;
    for (std::size_t c = 0; c < in_c; ++c) {
      const double* src = input.data() + c * in_h * in_w;
      double* gsrc = g.input.data() + c * in_h * in_w;
      for (std::size_t ki = 0; ki < k_h; ++ki) {
        for (std::size_t kj = 0; kj < k_w; ++kj) {
          const std::size_t widx = ((o * in_c + c) * k_h + ki) * k_w + kj;
          const double w = kernel[widx];
          double gw = 0.0;
          const auto [h_lo, h_hi] = valid_taps(out_h, in_h, stride, pad, ki);
          const auto [w_lo, w_hi] = valid_taps(out_w, in_w, stride, pad, kj);
          for (std::size_t oh = h_lo; oh < h_hi; ++oh) {
            const std::size_t base = (oh * stride + ki - pad) * in_w;
            const double* row = src + base;
            double* grow = gsrc + base;
            const double* gorow = go + oh * out_w;
            for (std::size_t ow = w_lo; ow < w_hi; ++ow) {
              const std::size_t iw = ow * stride + kj - pad;
              gw += gorow[ow] * row[iw];
              grow[iw] += w * gorow[ow];
            }
          }
          g.kernel[widx] = gw;
        }
      }
    }
  }
  return g;
}

Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require_rank(input, 3, "bilinear_resize");
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize: zero target extent");
  require_nonempty(input);
  const std::size_t c_n = input.channels(), in_h = input.height(), in_w = input.width();
  if (in_h == out_h && in_w == out_w) return input;
  const auto ys = axis_samples(in_h, out_h);
  const auto xs = axis_samples(in_w, out_w);
  Tensor out = Tensor::chw(c_n, out_h, out_w);
  for (std::size_t c = 0; c < c_n; ++c) {
    const double* src = input.data() + c * in_h * in_w;
    double* dst = out.data() + c * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double* r0 = src + ys[y].lo * in_w;
      const double* r1 = src + ys[y].hi * in_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& sx = xs[x];
        const double top = r0[sx.lo] + sx.t * (r0[sx.hi] - r0[sx.lo]);
        const double bottom = r1[sx.lo] + sx.t * (r1[sx.hi] - r1[sx.lo]);
        dst[y * out_w + x] = top + ys[y].t * (bottom - top);
      }
    }
  }
  return out;
}

Tensor bilinear_resize_backward(const Tensor& grad_output, std::size_t in_h,
                                std::size_t in_w) {
  require_rank(grad_output, 3, "bilinear_resize_backward");
  if (in_h == 0 || in_w == 0) throw ShapeError("bilinear_resize_backward: zero extent");
  const std::size_t c_n = grad_output.channels();
  const std::size_t out_h = grad_output.height(), out_w = grad_output.width();
  if (in_h == out_h && in_w == out_w) return grad_output;
  const auto ys = axis_samples(in_h, out_h);
  const auto xs = axis_samples(in_w, out_w);
  Tensor g = Tensor::chw(c_n, in_h, in_w);
  for (std::size_t c = 0; c < c_n; ++c) {
    const double* go = grad_output.data() + c * out_h * out_w;
    double* dst = g.data() + c * in_h * in_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double wy1 = ys[y].t, wy0 = 1.0 - wy1;
      double* r0 = dst + ys[y].lo * in_w;
      double* r1 = dst + ys[y].hi * in_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& sx = xs[x];
        const double v = go[y * out_w + x];
        const double wx1 = sx.t, wx0 = 1.0 - wx1;
        r0[sx.lo] += v * wy0 * wx0;
        r0[sx.hi] += v * wy0 * wx1;
        r1[sx.lo] += v * wy1 * wx0;
        r1[sx.hi] += v * wy1 * wx1;
      }
    }
  }
  return g;
}

Tensor avg_pool2(const Tensor& input) {
  require_rank(input, 3, "avg_pool2");
  const std::size_t c_n = input.channels(), in_h = input.height(), in_w = input.width();
  const std::size_t out_h = in_h / 2, out_w = in_w / 2;
  if (out_h == 0 || out_w == 0) throw ShapeError("avg_pool2: input smaller than 2x2");
  Tensor out = Tensor::chw(c_n, out_h, out_w);
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        out.at(c, y, x) = 0.25 * (input.at(c, 2 * y, 2 * x) + input.at(c, 2 * y, 2 * x + 1) +
                                  input.at(c, 2 * y + 1, 2 * x) +
                                  input.at(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

Tensor avg_pool2_backward(const Tensor& grad_output, std::size_t in_h, std::size_t in_w) {
  require_rank(grad_output, 3, "avg_pool2_backward");
  const std::size_t c_n = grad_output.channels();
  const std::size_t out_h = grad_output.height(), out_w = grad_output.width();
  if (out_h != in_h / 2 || out_w != in_w / 2) {
    throw ShapeError("avg_pool2_backward: extents do not match");
  }
  Tensor g = Tensor::chw(c_n, in_h, in_w);
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        const double v = 0.25 * grad_output.at(c, y, x);
        g.at(c, 2 * y, 2 * x) = v;
        g.at(c, 2 * y, 2 * x + 1) = v;
        g.at(c, 2 * y + 1, 2 * x) = v;
        g.at(c, 2 * y + 1, 2 * x + 1) = v;
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_output) {
  if (!pre_activation.same_shape(grad_output)) throw ShapeError("relu_backward: shape mismatch");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre_activation[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const std::size_t h = parts.front()->height(), w = parts.front()->width();
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    require_rank(*p, 3, "concat_channels");
    if (p->height() != h || p->width() != w) {
      throw ShapeError("concat_channels: spatial extents differ");
    }
    total += p->channels();
  }
  Tensor out = Tensor::chw(total, h, w);
  double* dst = out.data();
  for (const Tensor* p : parts) dst = std::copy(p->data(), p->data() + p->size(), dst);
  return out;
}

std::vector<Tensor> split_channels(const Tensor& input, std::span<const std::size_t> counts) {
  require_rank(input, 3, "split_channels");
  const std::size_t h = input.height(), w = input.width();
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (std::size_t n : counts) {
    if (offset + n > input.channels()) throw ShapeError("split_channels: counts exceed channels");
    Tensor part = Tensor::chw(n, h, w);
    std::copy(input.data() + offset * h * w, input.data() + (offset + n) * h * w, part.data());
    out.push_back(std::move(part));
    offset += n;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace oeem
