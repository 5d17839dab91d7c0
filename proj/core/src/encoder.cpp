#include "oeem/encoder.hpp"

#include <cmath>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"

namespace oeem {

Tensor Normalizer::apply(const Tensor& image) const {
  require_rank(image, 3, "normalize");
  if (image.channels() != mean.size()) {
    throw ShapeError("image has " + std::to_string(image.channels()) +
                     " channels, network expects " + std::to_string(mean.size()));
  }
  Tensor out = image;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    for (double& v : out.plane(c)) v = (v - mean[c]) / stddev[c];
  }
  return out;
}

Normalizer Normalizer::identity(std::size_t channels) {
  return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
}

Normalizer Normalizer::fit(const std::vector<const Tensor*>& images) {
  if (images.empty()) throw Error("cannot fit normalizer on zero images");
  const std::size_t c_n = images.front()->channels();
  std::vector<double> sum(c_n, 0.0), sq(c_n, 0.0);
  double count = 0.0;
  for (const Tensor* img : images) {
    for (std::size_t c = 0; c < c_n; ++c) {
      for (double v : img->plane(c)) {
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    count += static_cast<double>(img->height() * img->width());
  }
  Normalizer n;
  for (std::size_t c = 0; c < c_n; ++c) {
    const double m = sum[c] / count;
    const double var = std::max(sq[c] / count - m * m, 0.0);
    n.mean.push_back(m);
    n.stddev.push_back(std::max(std::sqrt(var), 1e-6));
  }
  return n;
}

Encoder::Encoder(ParamStore& params, const std::string& prefix, std::size_t in_channels,
                 std::array<std::size_t, kStages> widths, Rng& rng)
    : widths_(widths) {
  std::size_t in = in_channels;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::string base = prefix + ".stage" + std::to_string(s + 1);
    kernel_[s] = params.add(base + ".weight", {widths[s], in, 3, 3});
    bias_[s] = params.add(base + ".bias", {widths[s]});
    // He-normal initialization for ReLU stages.
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in * 9));
    for (double& w : params.value(kernel_[s]).values()) w = std_dev * rng.normal();
    in = widths[s];
  }
}

Encoder::Trace Encoder::forward(const ParamStore& params, const Tensor& x) const {
  if (x.height() < kMinExtent || x.width() < kMinExtent) {
    throw ShapeError("encoder input " + shape_string(x.shape()) + " is below the minimum extent " +
                     std::to_string(kMinExtent));
  }
  Trace t;
  Tensor cur = x;
  for (std::size_t s = 0; s < kStages; ++s) {
    t.input[s] = cur;
    t.pre_activation[s] = conv2d(cur, params.value(kernel_[s]), params.value(bias_[s]), 1, 1);
    t.output[s] = avg_pool2(relu(t.pre_activation[s]));
    cur = t.output[s];
  }
  return t;
}

Tensor Encoder::backward(ParamStore& params, const Trace& trace,
                         std::array<Tensor, kStages> grad_outputs) const {
  Tensor upstream;
  for (std::size_t s = kStages; s-- > 0;) {
    Tensor g = std::move(grad_outputs[s]);
    if (!upstream.empty()) {
      if (g.empty()) {
        g = std::move(upstream);
      } else {
        g += upstream;
      }
    }
    if (g.empty()) g = Tensor(trace.output[s].shape());
    const Tensor& pre = trace.pre_activation[s];
    Tensor g_pre = relu_backward(pre, avg_pool2_backward(g, pre.height(), pre.width()));
    Conv2dGrads cg = conv2d_backward(trace.input[s], params.value(kernel_[s]), 1, 1, g_pre);
    params.grad(kernel_[s]) += cg.kernel;
    params.grad(bias_[s]) += cg.bias;
    upstream = std::move(cg.input);
  }
  return upstream;
}

Tensor Encoder::fuse(const Trace& trace) {
  const Tensor& s1 = trace.output[0];
  const Tensor s2 = bilinear_resize(trace.output[1], s1.height(), s1.width());
  const Tensor s3 = bilinear_resize(trace.output[2], s1.height(), s1.width());
  const Tensor* parts[] = {&s1, &s2, &s3};
  return concat_channels(parts);
}

std::array<Tensor, Encoder::kStages> Encoder::fuse_backward(const Trace& trace,
                                                            const Tensor& grad_fused) {
  const std::size_t counts[] = {trace.output[0].channels(), trace.output[1].channels(),
                                trace.output[2].channels()};
  auto parts = split_channels(grad_fused, counts);
  return {std::move(parts[0]),
          bilinear_resize_backward(parts[1], trace.output[1].height(), trace.output[1].width()),
          bilinear_resize_backward(parts[2], trace.output[2].height(), trace.output[2].width())};
}

}  // namespace oeem
