#include "oeem/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oeem/errors.hpp"
#include "oeem/png_io.hpp"

namespace fs = std::filesystem;

namespace oeem {

std::string image_file_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu.png", id);
  return buf;
}

void save_dataset(const fs::path& dir, const Dataset& ds, std::span<const PatchRecord> patches) {
  auto write_split = [&](const char* split, const std::vector<std::size_t>& ids) {
    for (std::size_t id : ids) {
      write_image(dir / split / "images" / image_file_name(id), ds.images[id]);
      write_mask(dir / split / "masks" / image_file_name(id), ds.masks[id]);
    }
  };
  write_split("train", ds.train_ids);
  write_split("test", ds.test_ids);
  write_patches_csv(dir / "patches.csv", patches, ds.class_count);
}

Dataset load_dataset(const fs::path& dir, std::size_t classes) {
  if (!fs::is_directory(dir / "train" / "images")) {
    throw IoError("no dataset at " + dir.string() + " (expected " +
                  (dir / "train" / "images").string() + "; run `oeem synth` first)");
  }
  Dataset ds;
  ds.class_count = classes;
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const char* split : {"train", "test"}) {
    const fs::path images = dir / split / "images";
    if (!fs::is_directory(images)) continue;
    for (const auto& entry : fs::directory_iterator(images)) {
      if (entry.path().extension() != ".png") continue;
      const std::string stem = entry.path().stem().string();
      if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) continue;
      found.emplace_back(std::stoul(stem), split);
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) throw IoError("dataset at " + dir.string() + " has no images");
  const std::size_t max_id = found.back().first;
  ds.images.resize(max_id + 1);
  ds.masks.resize(max_id + 1);
  for (const auto& [id, split] : found) {
    ds.images[id] = read_image(dir / split / "images" / image_file_name(id));
    ds.masks[id] = read_mask(dir / split / "masks" / image_file_name(id), classes);
    if (ds.masks[id].height() != ds.images[id].height() ||
        ds.masks[id].width() != ds.images[id].width()) {
      throw IoError("image/mask extents differ for id " + std::to_string(id));
    }
    (split == "train" ? ds.train_ids : ds.test_ids).push_back(id);
  }
  return ds;
}

void write_patches_csv(const fs::path& path, std::span<const PatchRecord> patches,
                       std::size_t classes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "image_id,row,col,side,label_bits\n";
  for (const auto& p : patches) {
    os << p.image_id << ',' << p.row << ',' << p.col << ',' << p.side << ','
       << p.label.to_bits(classes) << '\n';
  }
}

std::vector<PatchRecord> read_patches_csv(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != "image_id,row,col,side,label_bits") {
    throw IoError(path.string() + ": unexpected header '" + line + "'");
  }
  std::vector<PatchRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& s : f) {
      if (!std::getline(ss, s, ',')) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
      }
    }
    try {
      out.push_back({std::stoul(f[0]), std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]),
                     PatchLabel::from_bits(f[4])});
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace oeem
