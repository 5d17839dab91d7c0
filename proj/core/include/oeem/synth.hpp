#ifndef OEEM_SYNTH_HPP_
#define OEEM_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oeem/rng.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr std::size_t kNonGland = 0;
inline constexpr std::size_t kGland = 1;

// H x W map of class indices; kIgnoreLabel marks pixels excluded from
// losses and metrics.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : height_(height), width_(width), labels_(height * width, fill) {}
  LabelMap(std::size_t height, std::size_t width, std::vector<std::uint8_t> labels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  std::uint8_t& at(std::size_t h, std::size_t w) { return labels_[h * width_ + w]; }
  std::uint8_t at(std::size_t h, std::size_t w) const { return labels_[h * width_ + w]; }
  std::uint8_t& operator[](std::size_t i) { return labels_[i]; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  std::span<const std::uint8_t> labels() const { return labels_; }

  bool operator==(const LabelMap&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> labels_;
};

using GtMask = LabelMap;
using PseudoMask = LabelMap;

// Multi-hot class presence for a patch (or an aggregate over patches).
struct PatchLabel {
  std::uint32_t bits = 0;

  bool has(std::size_t c) const { return (bits >> c) & 1u; }
  void set(std::size_t c) { bits |= (1u << c); }
  // Number of classes present (n).
  std::size_t count() const;

  // '1'/'0' per class, class 0 first: "11" = both, "10" = class 0 only.
  std::string to_bits(std::size_t classes) const;
  static PatchLabel from_bits(const std::string& text);

  PatchLabel& operator|=(const PatchLabel& o) {
    bits |= o.bits;
    return *this;
  }
  bool operator==(const PatchLabel&) const = default;
};

// Class c is present iff it has at least one pixel and at least
// min_presence * (pixel count of the region) pixels. Ignore pixels count
// toward the region size but never toward a class.
PatchLabel presence_label(const LabelMap& mask, std::size_t classes, double min_presence,
                          std::size_t row, std::size_t col, std::size_t h, std::size_t w);
PatchLabel presence_label(const LabelMap& mask, std::size_t classes, double min_presence = 0.0);

struct SynthConfig {
  std::size_t image_count = 40;
  std::size_t image_side = 96;
  std::size_t class_count = 2;
  // Difference between the mean intensities of gland and non-gland pixels.
  double contrast_gap = 0.15;
  // Cell size (pixels) of the low-pass noise that shapes the gland blobs.
  double smoothness = 48.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Dataset {
  std::size_t class_count = 2;
  std::vector<Tensor> images;    // 3 x side x side, values in [0, 1]
  std::vector<LabelMap> masks;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
};

// Images i.i.d. from per-image seeds derived from cfg.seed. The first
// floor(count * 85 / 165) images (at least one, at most count - 1) form the
// training split, the rest the test split.
Dataset generate_dataset(const SynthConfig& cfg);

// One mask: two octaves of smoothstep value noise thresholded at a random
// quantile in [0.4, 0.6], so both classes are always present.
LabelMap generate_mask(std::size_t side, double smoothness, Rng& rng);

// Pixel value per channel:
//   0.5 +- gap / 2 + (1 - gap) * (tint_c + 0.4 * texture_c)
// with texture_c in [-1, 1] drawn identically for both classes and
// |tint_c| <= 0.08, so values stay inside [0, 1] without clamping.
Tensor render_image(const LabelMap& mask, double contrast_gap, Rng& rng);

// Smoothstep-interpolated lattice noise in [-1, 1].
Tensor value_noise(std::size_t h, std::size_t w, double cell, Rng& rng);

struct PatchRecord {
  std::size_t image_id = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t side = 0;
  PatchLabel label;

  bool operator==(const PatchRecord&) const = default;
};

struct Patch {
  Tensor image;
  PatchRecord record;
};

// Offsets 0, stride, 2*stride, ... with the last one clamped to extent - side
// so the final patch touches the border.
std::vector<std::size_t> grid_offsets(std::size_t extent, std::size_t side, std::size_t stride);

// Patches with no qualifying class are dropped.
std::vector<Patch> crop_patches(const Tensor& image, const LabelMap& mask, std::size_t image_id,
                                std::size_t side, std::size_t stride, double min_presence,
                                std::size_t classes);

// Average of overlapping C x side x side maps placed at their records'
// offsets. Throws "incomplete coverage" if any pixel is left uncovered.
Tensor merge_patches(std::span<const Tensor> maps, std::span<const PatchRecord> records,
                     std::size_t height, std::size_t width);

Tensor crop(const Tensor& image, std::size_t row, std::size_t col, std::size_t h, std::size_t w);
LabelMap crop(const LabelMap& mask, std::size_t row, std::size_t col, std::size_t h,
              std::size_t w);

Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);
LabelMap flip_horizontal(const LabelMap& m);
LabelMap flip_vertical(const LabelMap& m);

// Flips round(fraction * |band|) pixels chosen uniformly from the boundary
// band: non-ignore pixels with a pixel of another class within Chebyshev
// distance `band_width`. Binary masks flip to the other class; with more
// classes a different class is drawn uniformly.
LabelMap corrupt_boundary(const LabelMap& mask, double fraction, std::size_t band_width,
                          std::size_t classes, Rng& rng);

}  // namespace oeem

#endif  // OEEM_SYNTH_HPP_
