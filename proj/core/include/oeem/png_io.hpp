#ifndef OEEM_PNG_IO_HPP_
#define OEEM_PNG_IO_HPP_

#include <cstddef>
#include <filesystem>

#include "oeem/synth.hpp"
#include "oeem/tensor.hpp"

namespace oeem {

// Masks: 8-bit single-channel PNG holding raw class indices, 255 = ignore.
void write_mask(const std::filesystem::path& path, const LabelMap& mask);
// Throws IoError naming the offending value if a pixel is neither a class
// index below `classes` nor 255.
LabelMap read_mask(const std::filesystem::path& path, std::size_t classes);

// Images: 8-bit RGB PNG; values in [0, 1] are scaled by 255 and rounded.
void write_image(const std::filesystem::path& path, const Tensor& image);
Tensor read_image(const std::filesystem::path& path);

// H x W (or 1 x H x W) map in [0, 1] as 8-bit grayscale, for inspection dumps.
void write_gray(const std::filesystem::path& path, const Tensor& map);

}  // namespace oeem

#endif  // OEEM_PNG_IO_HPP_
