#pragma once

// Flat `key=value` configuration files. `#` starts a comment line; keys may
// repeat (get_all) and surrounding whitespace is trimmed.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spim {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig from_file(const std::filesystem::path& path);

  void set(std::string key, std::string value);

  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key, double fallback) const;

  /// Throws Errc::config_error naming the first key not in `known`.
  void require_known(std::initializer_list<std::string_view> known) const;

  /// Relative paths in this file resolve against this directory.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::filesystem::path resolve(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
  std::filesystem::path base_dir_;
};

std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace spim
