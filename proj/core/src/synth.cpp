#include "oeem/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "oeem/errors.hpp"

namespace oeem {

LabelMap::LabelMap(std::size_t height, std::size_t width, std::vector<std::uint8_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (labels_.size() != height_ * width_) throw ShapeError("label map size mismatch");
}

std::size_t PatchLabel::count() const { return static_cast<std::size_t>(std::popcount(bits)); }

std::string PatchLabel::to_bits(std::size_t classes) const {
  std::string s;
  for (std::size_t c = 0; c < classes; ++c) s.push_back(has(c) ? '1' : '0');
  return s;
}

PatchLabel PatchLabel::from_bits(const std::string& text) {
  if (text.empty() || text.size() > 32) throw Error("invalid label bits '" + text + "'");
  PatchLabel l;
  for (std::size_t c = 0; c < text.size(); ++c) {
    if (text[c] == '1') {
      l.set(c);
    } else if (text[c] != '0') {
      throw Error("invalid label bits '" + text + "'");
    }
  }
  return l;
}

PatchLabel presence_label(const LabelMap& mask, std::size_t classes, double min_presence,
                          std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  if (row + h > mask.height() || col + w > mask.width()) {
    throw ShapeError("presence_label: region out of bounds");
  }
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t y = row; y < row + h; ++y) {
    for (std::size_t x = col; x < col + w; ++x) {
      const std::uint8_t v = mask.at(y, x);
      if (v != kIgnoreLabel && v < classes) ++counts[v];
    }
  }
  const double need = min_presence * static_cast<double>(h * w);
  PatchLabel label;
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] > 0 && static_cast<double>(counts[c]) >= need) label.set(c);
  }
  return label;
}

PatchLabel presence_label(const LabelMap& mask, std::size_t classes, double min_presence) {
  return presence_label(mask, classes, min_presence, 0, 0, mask.height(), mask.width());
}

void SynthConfig::validate() const {
  if (!(contrast_gap > 0.0) || contrast_gap > 1.0) {
    throw ConfigError("synth.contrast_gap must be in (0, 1]");
  }
  if (class_count != 2) throw ConfigError("synth.class_count must be 2 (gland / non-gland)");
  if (image_count < 2) throw ConfigError("synth.image_count must be >= 2");
  if (image_side < 16) throw ConfigError("synth.image_side must be >= 16");
  if (!(smoothness >= 2.0)) throw ConfigError("synth.smoothness must be >= 2");
}

Tensor value_noise(std::size_t h, std::size_t w, double cell, Rng& rng) {
  const std::size_t gh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / cell)) + 2;
  const std::size_t gw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / cell)) + 2;
  std::vector<double> lattice(gh * gw);
  for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
  // Random sub-cell phase so lattice points do not align across images.
  const double oy = rng.uniform() * cell, ox = rng.uniform() * cell;
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  Tensor out = Tensor::hw(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = (static_cast<double>(y) + oy) / cell;
    const auto iy = static_cast<std::size_t>(fy);
    const double ty = smooth(fy - static_cast<double>(iy));
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = (static_cast<double>(x) + ox) / cell;
      const auto ix = static_cast<std::size_t>(fx);
      const double tx = smooth(fx - static_cast<double>(ix));
      const double a = lattice[iy * gw + ix], b = lattice[iy * gw + ix + 1];
      const double c = lattice[(iy + 1) * gw + ix], d = lattice[(iy + 1) * gw + ix + 1];
      const double top = a + tx * (b - a);
      const double bottom = c + tx * (d - c);
      out.at(y, x) = top + ty * (bottom - top);
    }
  }
  return out;
}

LabelMap generate_mask(std::size_t side, double smoothness, Rng& rng) {
  Tensor coarse = value_noise(side, side, smoothness, rng);
  Tensor fine = value_noise(side, side, std::max(2.0, smoothness / 3.0), rng);
  std::vector<double> field(side * side);
  for (std::size_t i = 0; i < field.size(); ++i) field[i] = coarse[i] + 0.35 * fine[i];

  const double q = rng.uniform(0.4, 0.6);
  std::vector<double> sorted = field;
  const auto k = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];

  LabelMap mask(side, side);
  for (std::size_t i = 0; i < field.size(); ++i) {
    mask[i] = field[i] > threshold ? kGland : kNonGland;
  }
  return mask;
}

Tensor render_image(const LabelMap& mask, double contrast_gap, Rng& rng) {
  const std::size_t h = mask.height(), w = mask.width();
  constexpr double kAmplitude = 0.4;
  constexpr double kTintLimit = 0.08;
  Tensor img = Tensor::chw(3, h, w);
  const double spread = 1.0 - contrast_gap;
  for (std::size_t c = 0; c < 3; ++c) {
    const double tint = rng.uniform(-kTintLimit, kTintLimit);
    Tensor texture = value_noise(h, w, 4.0, rng);
    auto plane = img.plane(c);
    for (std::size_t i = 0; i < h * w; ++i) {
      const double t = 0.6 * texture[i] + 0.4 * rng.uniform(-1.0, 1.0);
      const double base = mask[i] == kGland ? 0.5 + 0.5 * contrast_gap : 0.5 - 0.5 * contrast_gap;
      plane[i] = base + spread * (tint + kAmplitude * t);
    }
  }
  return img;
}

Dataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.class_count = cfg.class_count;
  const Rng root(cfg.seed);
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt >= 16) throw Error("could not generate a class-balanced dataset");
    ds.images.clear();
    ds.masks.clear();
    std::size_t gland = 0;
    for (std::size_t i = 0; i < cfg.image_count; ++i) {
      Rng rng = root.split(attempt * 1000003 + i);
      LabelMap mask = generate_mask(cfg.image_side, cfg.smoothness, rng);
      gland += static_cast<std::size_t>(std::count(mask.labels().begin(), mask.labels().end(),
                                                    static_cast<std::uint8_t>(kGland)));
      ds.images.push_back(render_image(mask, cfg.contrast_gap, rng));
      ds.masks.push_back(std::move(mask));
    }
    const double frac = static_cast<double>(gland) /
                        static_cast<double>(cfg.image_count * cfg.image_side * cfg.image_side);
    if (frac >= 0.3 && frac <= 0.7) break;
  }
  std::size_t n_train = cfg.image_count * 85 / 165;
  n_train = std::clamp<std::size_t>(n_train, 1, cfg.image_count - 1);
  for (std::size_t i = 0; i < cfg.image_count; ++i) {
    (i < n_train ? ds.train_ids : ds.test_ids).push_back(i);
  }
  return ds;
}

std::vector<std::size_t> grid_offsets(std::size_t extent, std::size_t side, std::size_t stride) {
  if (side > extent) {
    throw ShapeError("patch side " + std::to_string(side) + " exceeds image extent " +
                     std::to_string(extent));
  }
  if (side == 0 || stride == 0) throw ShapeError("patch side and stride must be >= 1");
  std::vector<std::size_t> offs;
  for (std::size_t o = 0;; o += stride) {
    if (o + side >= extent) {
      offs.push_back(extent - side);
      break;
    }
    offs.push_back(o);
  }
  return offs;
}

Tensor crop(const Tensor& image, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  require_rank(image, 3, "crop");
  if (row + h > image.height() || col + w > image.width()) {
    throw ShapeError("crop window out of bounds");
  }
  Tensor out = Tensor::chw(image.channels(), h, w);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* src = &image.data()[(c * image.height() + row + y) * image.width() + col];
      std::copy(src, src + w, &out.data()[(c * h + y) * w]);
    }
  }
  return out;
}

LabelMap crop(const LabelMap& mask, std::size_t row, std::size_t col, std::size_t h,
              std::size_t w) {
  if (row + h > mask.height() || col + w > mask.width()) {
    throw ShapeError("crop window out of bounds");
  }
  LabelMap out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out.at(y, x) = mask.at(row + y, col + x);
  }
  return out;
}

std::vector<Patch> crop_patches(const Tensor& image, const LabelMap& mask, std::size_t image_id,
                                std::size_t side, std::size_t stride, double min_presence,
                                std::size_t classes) {
  require_rank(image, 3, "crop_patches");
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw ShapeError("crop_patches: image and mask extents differ");
  }
  const auto rows = grid_offsets(image.height(), side, stride);
  const auto cols = grid_offsets(image.width(), side, stride);
  std::vector<Patch> out;
  for (std::size_t r : rows) {
    for (std::size_t c : cols) {
      PatchLabel label = presence_label(mask, classes, min_presence, r, c, side, side);
      if (label.count() == 0) continue;
      out.push_back({crop(image, r, c, side, side), PatchRecord{image_id, r, c, side, label}});
    }
  }
  return out;
}

Tensor merge_patches(std::span<const Tensor> maps, std::span<const PatchRecord> records,
                     std::size_t height, std::size_t width) {
  if (maps.size() != records.size()) throw ShapeError("merge_patches: maps/records mismatch");
  if (maps.empty()) throw ShapeError("incomplete coverage");
  const std::size_t c_n = maps.front().channels();
  Tensor sum = Tensor::chw(c_n, height, width);
  std::vector<std::size_t> coverage(height * width, 0);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Tensor& m = maps[i];
    const PatchRecord& r = records[i];
    require_rank(m, 3, "merge_patches");
    if (m.channels() != c_n || m.height() != r.side || m.width() != r.side) {
      throw ShapeError("merge_patches: patch map shape " + shape_string(m.shape()) +
                       " does not match its record");
    }
    if (r.row + r.side > height || r.col + r.side > width) {
      throw ShapeError("merge_patches: patch out of bounds");
    }
    for (std::size_t c = 0; c < c_n; ++c) {
      for (std::size_t y = 0; y < r.side; ++y) {
        for (std::size_t x = 0; x < r.side; ++x) sum.at(c, r.row + y, r.col + x) += m.at(c, y, x);
      }
    }
    for (std::size_t y = 0; y < r.side; ++y) {
      for (std::size_t x = 0; x < r.side; ++x) ++coverage[(r.row + y) * width + r.col + x];
    }
  }
  for (std::size_t p = 0; p < height * width; ++p) {
    if (coverage[p] == 0) throw ShapeError("incomplete coverage");
    if (coverage[p] == 1) continue;
    const auto n = static_cast<double>(coverage[p]);
    for (std::size_t c = 0; c < c_n; ++c) sum[c * height * width + p] /= n;
  }
  return sum;
}

Tensor flip_horizontal(const Tensor& t) {
  Tensor out = t;
  const std::size_t h = t.height(), w = t.width(), planes = t.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out[(p * h + y) * w + x] = t[(p * h + y) * w + (w - 1 - x)];
      }
    }
  }
  return out;
}

Tensor flip_vertical(const Tensor& t) {
  Tensor out = t;
  const std::size_t h = t.height(), w = t.width(), planes = t.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out[(p * h + y) * w + x] = t[(p * h + (h - 1 - y)) * w + x];
      }
    }
  }
  return out;
}

LabelMap flip_horizontal(const LabelMap& m) {
  LabelMap out(m.height(), m.width());
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) out.at(y, x) = m.at(y, m.width() - 1 - x);
  }
  return out;
}

LabelMap flip_vertical(const LabelMap& m) {
  LabelMap out(m.height(), m.width());
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) out.at(y, x) = m.at(m.height() - 1 - y, x);
  }
  return out;
}

LabelMap corrupt_boundary(const LabelMap& mask, double fraction, std::size_t band_width,
                          std::size_t classes, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0) throw ConfigError("noise fraction must be in [0, 1]");
  LabelMap out = mask;
  if (fraction == 0.0) return out;
  const auto h = static_cast<std::ptrdiff_t>(mask.height());
  const auto w = static_cast<std::ptrdiff_t>(mask.width());
  const auto r = static_cast<std::ptrdiff_t>(band_width);
  std::vector<std::size_t> band;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::uint8_t v = mask.at(y, x);
      if (v == kIgnoreLabel) continue;
      bool boundary = false;
      for (std::ptrdiff_t dy = -r; dy <= r && !boundary; ++dy) {
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
          const std::ptrdiff_t yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const std::uint8_t u = mask.at(yy, xx);
          if (u != kIgnoreLabel && u != v) {
            boundary = true;
            break;
          }
        }
      }
      if (boundary) band.push_back(static_cast<std::size_t>(y * w + x));
    }
  }
  const auto n_flip =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(band.size())));
  // Partial Fisher-Yates: the first n_flip entries become a uniform sample.
  for (std::size_t i = 0; i < n_flip; ++i) {
    const std::size_t j = i + rng.below(band.size() - i);
    std::swap(band[i], band[j]);
    const std::size_t p = band[i];
    const std::uint8_t v = mask[p];
    if (classes == 2) {
      out[p] = static_cast<std::uint8_t>(1 - v);
    } else {
      const std::size_t other = rng.below(classes - 1);
      out[p] = static_cast<std::uint8_t>(other >= v ? other + 1 : other);
    }
  }
  return out;
}

}  // namespace oeem
