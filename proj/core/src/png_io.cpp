#include "oeem/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

void write_png(const std::filesystem::path& path, std::size_t h, std::size_t w,
               png_uint_32 format, const std::vector<std::uint8_t>& pixels) {
  ensure_parent(path);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    std::string msg = "cannot write " + path.string() + ": " + img.message;
    png_image_free(&img);
    throw IoError(msg);
  }
}

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format,
                                   std::size_t& h, std::size_t& w) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    std::string msg = "cannot read " + path.string() + ": " + img.message;
    png_image_free(&img);
    throw IoError(msg);
  }
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = "cannot decode " + path.string() + ": " + img.message;
    png_image_free(&img);
    throw IoError(msg);
  }
  h = img.height;
  w = img.width;
  return buf;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_mask(const std::filesystem::path& path, const LabelMap& mask) {
  std::vector<std::uint8_t> px(mask.labels().begin(), mask.labels().end());
  write_png(path, mask.height(), mask.width(), PNG_FORMAT_GRAY, px);
}

LabelMap read_mask(const std::filesystem::path& path, std::size_t classes) {
  std::size_t h = 0, w = 0;
  auto px = read_png(path, PNG_FORMAT_GRAY, h, w);
  for (std::uint8_t v : px) {
    if (v != kIgnoreLabel && v >= classes) {
      throw IoError(path.string() + ": mask value " + std::to_string(v) +
                    " is not a class index below " + std::to_string(classes) +
                    " or the ignore value 255");
    }
  }
  return LabelMap(h, w, std::move(px));
}

void write_image(const std::filesystem::path& path, const Tensor& image) {
  require_rank(image, 3, "write_image");
  if (image.channels() != 3) throw ShapeError("write_image expects 3 channels");
  const std::size_t h = image.height(), w = image.width();
  std::vector<std::uint8_t> px(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) px[(y * w + x) * 3 + c] = to_byte(image.at(c, y, x));
    }
  }
  write_png(path, h, w, PNG_FORMAT_RGB, px);
}

Tensor read_image(const std::filesystem::path& path) {
  std::size_t h = 0, w = 0;
  auto px = read_png(path, PNG_FORMAT_RGB, h, w);
  Tensor img = Tensor::chw(3, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = px[(y * w + x) * 3 + c] / 255.0;
    }
  }
  return img;
}

void write_gray(const std::filesystem::path& path, const Tensor& map) {
  const std::size_t h = map.height(), w = map.width();
  if (map.size() != h * w) throw ShapeError("write_gray expects a single plane");
  std::vector<std::uint8_t> px(h * w);
  for (std::size_t i = 0; i < h * w; ++i) px[i] = to_byte(map[i]);
  write_png(path, h, w, PNG_FORMAT_GRAY, px);
}

}  // namespace oeem
