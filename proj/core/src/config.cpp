#include "oeem/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oeem/errors.hpp"

namespace oeem {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<ExperimentConfig::KeySpec>& ExperimentConfig::keys() {
  static const std::vector<KeySpec> specs = {
      {"seed", "7", "root seed; every stage derives its own stream from it"},
      {"data_dir", "data", "dataset directory written by synth"},
      {"out_dir", "out", "artifact directory for pseudo/train/ablate"},
      {"synth.image_count", "40", "images generated (split 85:80 train:test, floored)"},
      {"synth.image_side", "96", "image side in pixels"},
      {"synth.contrast_gap", "0.15", "gland minus non-gland mean intensity, in (0, 1]"},
      {"synth.smoothness", "48", "cell size of the low-pass noise shaping glands"},
      {"patch.side", "32", "classification patch side"},
      {"patch.stride", "16", "classification patch stride"},
      {"patch.min_presence", "0.01", "fraction of a patch a class needs to be labelled present"},
      {"cls.lr", "0.01", "classifier base learning rate"},
      {"cls.epochs", "20", "classifier epochs"},
      {"cls.batch", "16", "classifier batch size"},
      {"cls.poly_power", "0.9", "classifier poly decay power"},
      {"cls.momentum", "0.9", "classifier SGD momentum"},
      {"cam.scales", "1,1.25,1.5,1.75,2", "CAM test scales"},
      {"seg.lr", "0.005", "segmentation base learning rate"},
      {"seg.iterations", "300", "segmentation iterations"},
      {"seg.batch", "8", "segmentation batch size (crops)"},
      {"seg.poly_power", "0.9", "segmentation poly decay power"},
      {"seg.momentum", "0.9", "segmentation SGD momentum"},
      {"seg.crop", "64", "segmentation training crop side"},
      {"mining", "none", "none|ohem|c_max|c_diff|l_norm|lc_mix"},
      {"ohem.keep_fraction", "0.25", "fraction of hardest pixels kept by ohem"},
      {"lnorm.scope", "crop", "crop|batch: normalization scope of loss-based weights"},
      {"supervision", "pseudo", "pseudo|gt: masks used to train the segmentation net"},
      {"pseudo_dir", "", "pseudo-mask directory (empty: <out_dir>/pseudo)"},
      {"pseudo.noise", "0", "fraction of boundary-band pseudo-mask pixels flipped before training"},
      {"pseudo.noise_band", "2", "boundary band half-width in pixels"},
      {"infer.crop", "64", "sliding-window tile side"},
      {"infer.stride", "48", "sliding-window stride"},
      {"infer.scales", "0.75,1,1.25", "test scales"},
      {"ablate.seeds", "5", "seeds per mining mode in ablate"},
  };
  return specs;
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : keys()) values_.emplace(k.key, k.default_value);
}

ExperimentConfig ExperimentConfig::from_string(std::string_view text, std::string_view origin) {
  ExperimentConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    try {
      cfg.set(key, trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_string(ss.str(), path.string());
}

void ExperimentConfig::set(std::string_view key, std::string value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = std::move(value);
}

const std::string& ExperimentConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

double ExperimentConfig::real(std::string_view key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0 || !std::isfinite(d)) {
    throw ConfigError("config key '" + std::string(key) + "': '" + v + "' is not a number");
  }
  return d;
}

std::uint64_t ExperimentConfig::u64(std::string_view key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno != 0) {
    throw ConfigError("config key '" + std::string(key) + "': '" + v +
                      "' is not a non-negative integer");
  }
  return n;
}

std::size_t ExperimentConfig::count(std::string_view key) const {
  return static_cast<std::size_t>(u64(key));
}

std::vector<double> ExperimentConfig::reals(std::string_view key) const {
  const std::string& v = get(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    char* end = nullptr;
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || !std::isfinite(d)) {
      throw ConfigError("config key '" + std::string(key) + "': '" + v +
                        "' is not a comma-separated list of numbers");
    }
    out.push_back(d);
  }
  if (out.empty()) throw ConfigError("config key '" + std::string(key) + "' is empty");
  return out;
}

std::string ExperimentConfig::resolved() const {
  std::string out;
  for (const auto& k : keys()) {
    out += k.key;
    out += " = ";
    out += values_.at(k.key);
    out += '\n';
  }
  return out;
}

void ExperimentConfig::write_resolved(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << resolved();
}

}  // namespace oeem
