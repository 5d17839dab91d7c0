#ifndef OEEM_CONFIG_HPP_
#define OEEM_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace oeem {

// Plain-text experiment configuration: one `key = value` per line, `#`
// starts a comment. Every key has a default; unknown keys are rejected.
class ExperimentConfig {
 public:
  struct KeySpec {
    const char* key;
    const char* default_value;
    const char* help;
  };
  static const std::vector<KeySpec>& keys();

  ExperimentConfig();

  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_string(std::string_view text, std::string_view origin = "<string>");

  // Throws ConfigError naming the key if it is unknown.
  void set(std::string_view key, std::string value);
  const std::string& get(std::string_view key) const;

  std::string str(std::string_view key) const { return get(key); }
  double real(std::string_view key) const;
  std::size_t count(std::string_view key) const;
  std::uint64_t u64(std::string_view key) const;
  std::vector<double> reals(std::string_view key) const;

  // All keys in declaration order, one `key = value` line each.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace oeem

#endif  // OEEM_CONFIG_HPP_
