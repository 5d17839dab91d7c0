#include "oeem/infer.hpp"

#include <algorithm>
#include <cmath>

#include "oeem/errors.hpp"
#include "oeem/ops.hpp"

namespace oeem {

Tensor sliding_infer(const SegNet& net, const Tensor& image, std::size_t crop, std::size_t stride,
                     std::span<const double> scales) {
  require_rank(image, 3, "sliding_infer");
  if (scales.empty()) throw ShapeError("sliding_infer: no scales");
  if (crop == 0 || stride == 0) throw ShapeError("sliding_infer: crop and stride must be >= 1");
  const std::size_t h = image.height(), w = image.width();
  Tensor sum;
  std::size_t used = 0;
  for (double s : scales) {
    if (!(s > 0.0)) throw ShapeError("sliding_infer: scales must be positive");
    const auto sh = static_cast<std::size_t>(std::lround(static_cast<double>(h) * s));
    const auto sw = static_cast<std::size_t>(std::lround(static_cast<double>(w) * s));
    if (sh < Encoder::kMinExtent || sw < Encoder::kMinExtent) continue;
    const Tensor scaled = bilinear_resize(image, sh, sw);
    const std::size_t tile = std::min({crop, sh, sw});
    std::vector<Tensor> probs;
    std::vector<PatchRecord> records;
    for (std::size_t r : grid_offsets(sh, tile, stride)) {
      for (std::size_t c : grid_offsets(sw, tile, stride)) {
        probs.push_back(softmax_channel(net.forward(oeem::crop(scaled, r, c, tile, tile))));
        records.push_back(PatchRecord{0, r, c, tile, {}});
      }
    }
    Tensor merged = bilinear_resize(merge_patches(probs, records, sh, sw), h, w);
    if (sum.empty()) {
      sum = std::move(merged);
    } else {
      sum += merged;
    }
    ++used;
  }
  if (used == 0) throw ShapeError("sliding_infer: no feasible scale");
  if (used > 1) {
    const std::size_t hw = h * w;
    for (std::size_t p = 0; p < hw; ++p) {
      double total = 0.0;
      for (std::size_t c = 0; c < sum.channels(); ++c) total += sum[c * hw + p];
      for (std::size_t c = 0; c < sum.channels(); ++c) sum[c * hw + p] /= total;
    }
  }
  return sum;
}

LabelMap argmax_mask(const Tensor& probs) {
  require_rank(probs, 3, "argmax_mask");
  const std::size_t hw = probs.height() * probs.width();
  LabelMap out(probs.height(), probs.width());
  for (std::size_t p = 0; p < hw; ++p) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < probs.channels(); ++c) {
      if (probs[c * hw + p] > probs[arg * hw + p]) arg = c;
    }
    out[p] = static_cast<std::uint8_t>(arg);
  }
  return out;
}

}  // namespace oeem
