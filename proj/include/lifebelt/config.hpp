#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lifebelt {

/// Flat `section.key = value` configuration. Lines starting with '#' and
/// blank lines are ignored. Getters with a default record the default, so
/// echo() always shows the effective configuration of a run.
class RunConfig {
 public:
  RunConfig() = default;

  /// Throws ConfigError naming `origin` and the line number on malformed input.
  static RunConfig parse(std::string_view text, std::string_view origin = "<config>");
  /// Throws IoError when the file cannot be read.
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::optional<double> find_double(const std::string& key) const;

  /// Keys outside `allowed` are errors.
  void require_known(std::span<const std::string_view> allowed) const;

  /// Sorted `key = value` lines.
  std::string echo() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

/// Shortest round-trip text for a double; "-inf"/"inf"/"nan" for non-finite.
std::string format_double(double v);

/// "a,b,c" or "lo:hi:n" (n evenly spaced points including both ends).
std::vector<double> parse_real_list(std::string_view text);
std::vector<std::int64_t> parse_int_list(std::string_view text);

}  // namespace lifebelt
