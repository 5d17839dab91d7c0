#include "oeem/segnet.hpp"

#include <cmath>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"

namespace oeem {

SegNet make_segnet(std::size_t classes, std::size_t in_channels, Rng& rng) {
  SegNet net;
  net.classes = classes;
  net.encoder = Encoder(net.params, "seg.encoder", in_channels, SegNet::kWidths, rng);
  net.head_weight = net.params.add("seg.head.weight", {classes, SegNet::kFusedChannels, 1, 1});
  net.head_bias = net.params.add("seg.head.bias", {classes});
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(SegNet::kFusedChannels));
  for (double& w : net.params.value(net.head_weight).values()) w = std_dev * rng.normal();
  net.normalizer = Normalizer::identity(in_channels);
  return net;
}

Tensor SegNet::forward(const Tensor& image, Trace* trace) const {
  require_rank(image, 3, "segnet input");
  Encoder::Trace enc = encoder.forward(params, normalizer.apply(image));
  Tensor fused = Encoder::fuse(enc);
  Tensor coarse = conv2d(fused, params.value(head_weight), params.value(head_bias), 1, 0);
  Tensor logits = bilinear_resize(coarse, image.height(), image.width());
  if (trace) {
    trace->encoder = std::move(enc);
    trace->fused = std::move(fused);
    trace->coarse = std::move(coarse);
  }
  return logits;
}

void SegNet::backward(const Trace& trace, const Tensor& grad_logits) {
  const Tensor g_coarse =
      bilinear_resize_backward(grad_logits, trace.coarse.height(), trace.coarse.width());
  Conv2dGrads g = conv2d_backward(trace.fused, params.value(head_weight), 1, 0, g_coarse);
  params.grad(head_weight) += g.kernel;
  params.grad(head_bias) += g.bias;
  encoder.backward(params, trace.encoder, Encoder::fuse_backward(trace.encoder, g.input));
}

}  // namespace oeem
