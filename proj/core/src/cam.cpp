#include "oeem/cam.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"

namespace oeem {

Tensor compute_cam(const ClassifierNet& net, const Tensor& image) {
  const Tensor fused = net.fused_features(image);
  const std::size_t k_n = fused.channels();
  const std::size_t hw = fused.height() * fused.width();
  const Tensor& w = net.params.value(net.cls_weight);
  Tensor cam = Tensor::chw(net.classes, fused.height(), fused.width());
  for (std::size_t c = 0; c < net.classes; ++c) {
    double* dst = cam.data() + c * hw;
    for (std::size_t k = 0; k < k_n; ++k) {
      const double wk = w[c * k_n + k];
      const double* src = fused.data() + k * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] += wk * src[p];
    }
  }
  return bilinear_resize(cam, image.height(), image.width());
}

Tensor multiscale_cam(const ClassifierNet& net, const Tensor& image, std::span<const double> scales,
                      std::vector<double>* skipped) {
  require_rank(image, 3, "multiscale_cam");
  if (scales.empty()) throw ShapeError("multiscale_cam: no scales");
  const std::size_t h = image.height(), w = image.width();
  Tensor sum;
  std::size_t used = 0;
  for (double s : scales) {
    if (!(s > 0.0)) throw ShapeError("multiscale_cam: scales must be positive");
    const auto sh = static_cast<std::size_t>(std::lround(static_cast<double>(h) * s));
    const auto sw = static_cast<std::size_t>(std::lround(static_cast<double>(w) * s));
    if (sh < Encoder::kMinExtent || sw < Encoder::kMinExtent) {
      if (skipped) skipped->push_back(s);
      std::cerr << "warning: CAM scale " << s << " gives " << sh << "x" << sw
                << ", below the network minimum; skipped\n";
      continue;
    }
    Tensor cam = compute_cam(net, bilinear_resize(image, sh, sw));
    cam = bilinear_resize(cam, h, w);
    if (sum.empty()) {
      sum = std::move(cam);
    } else {
      sum += cam;
    }
    ++used;
  }
  if (used == 0) throw ShapeError("multiscale_cam: every scale was below the network minimum");
  if (used > 1) sum *= 1.0 / static_cast<double>(used);

  for (std::size_t c = 0; c < sum.channels(); ++c) {
    auto plane = sum.plane(c);
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double min = *lo, range = *hi - *lo;
    for (double& v : plane) v = range > 0.0 ? (v - min) / range : 0.0;
  }
  return sum;
}

PseudoMask make_pseudomask(const Tensor& cam, const PatchLabel& label) {
  require_rank(cam, 3, "make_pseudomask");
  const std::size_t c_n = cam.channels();
  const std::size_t hw = cam.height() * cam.width();
  bool any = false;
  for (std::size_t c = 0; c < c_n; ++c) any = any || label.has(c);
  if (!any) throw Error("make_pseudomask: every class channel is suppressed by the label");
  PseudoMask mask(cam.height(), cam.width());
  for (std::size_t p = 0; p < hw; ++p) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = c_n;
    for (std::size_t c = 0; c < c_n; ++c) {
      if (!label.has(c)) continue;
      const double v = cam[c * hw + p];
      if (arg == c_n || v > best) {
        best = v;
        arg = c;
      }
    }
    mask[p] = static_cast<std::uint8_t>(arg);
  }
  return mask;
}

void refine_patch_cam(Tensor& cam, const PatchLabel& label) {
  const bool single = label.count() == 1;
  for (std::size_t c = 0; c < cam.channels(); ++c) {
    if (!label.has(c)) {
      for (double& v : cam.plane(c)) v = 0.0;
    } else if (single) {
      for (double& v : cam.plane(c)) v = 1.0;
    }
  }
}

ImagePseudo image_pseudomask(const ClassifierNet& net, const Tensor& image,
                             std::span<const PatchRecord> records, const PseudoOptions& opts) {
  if (records.empty()) throw Error("image_pseudomask: image has no labelled patches");
  std::vector<Tensor> raw, refined;
  ImagePseudo out;
  for (const PatchRecord& r : records) {
    Tensor cam = multiscale_cam(net, crop(image, r.row, r.col, r.side, r.side), opts.scales);
    raw.push_back(cam);
    refine_patch_cam(cam, r.label);
    refined.push_back(std::move(cam));
    out.label |= r.label;
  }
  PatchLabel all;
  for (std::size_t c = 0; c < net.classes; ++c) all.set(c);
  out.cam_mask = make_pseudomask(merge_patches(raw, records, image.height(), image.width()), all);
  out.cam = merge_patches(refined, records, image.height(), image.width());
  out.mask = make_pseudomask(out.cam, out.label);
  return out;
}

}  // namespace oeem
