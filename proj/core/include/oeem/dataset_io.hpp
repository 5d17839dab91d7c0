#ifndef OEEM_DATASET_IO_HPP_
#define OEEM_DATASET_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "oeem/synth.hpp"

namespace oeem {

// "007.png"
std::string image_file_name(std::size_t id);

// Layout:
//   <dir>/{train,test}/{images,masks}/NNN.png   (NNN = global image id)
//   <dir>/patches.csv                           (training-split patches)
void save_dataset(const std::filesystem::path& dir, const Dataset& ds,
                  std::span<const PatchRecord> patches);
Dataset load_dataset(const std::filesystem::path& dir, std::size_t classes);

// Header: image_id,row,col,side,label_bits
void write_patches_csv(const std::filesystem::path& path, std::span<const PatchRecord> patches,
                       std::size_t classes);
std::vector<PatchRecord> read_patches_csv(const std::filesystem::path& path);

}  // namespace oeem

#endif  // OEEM_DATASET_IO_HPP_
