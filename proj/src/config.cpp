#include "lifebelt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lifebelt/errors.hpp"

namespace lifebelt {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s, std::string_view what) {
  s = trim(s);
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("'" + std::string(what) + "': expected a number, got '" + std::string(s) +
                      "'");
  }
  return v;
}

std::int64_t to_int(std::string_view s, std::string_view what) {
  s = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("'" + std::string(what) + "': expected an integer, got '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

RunConfig RunConfig::parse(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'section.key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == key.size()) {
      throw ConfigError(where + ": key '" + std::string(key) + "' is not of the form section.key");
    }
    if (cfg.has(std::string(key))) {
      throw ConfigError(where + ": duplicate key '" + std::string(key) + "'");
    }
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

const std::string& RunConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_string(const std::string& key) { return raw(key); }

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) {
  return values_.try_emplace(key, fallback).first->second;
}

double RunConfig::get_double(const std::string& key) { return to_double(raw(key), key); }

double RunConfig::get_double(const std::string& key, double fallback) {
  return to_double(values_.try_emplace(key, format_double(fallback)).first->second, key);
}

std::int64_t RunConfig::get_int(const std::string& key) { return to_int(raw(key), key); }

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) {
  return to_int(values_.try_emplace(key, std::to_string(fallback)).first->second, key);
}

std::uint64_t RunConfig::get_uint(const std::string& key, std::uint64_t fallback) {
  const auto& s = values_.try_emplace(key, std::to_string(fallback)).first->second;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) {
  const auto& s = values_.try_emplace(key, fallback ? "true" : "false").first->second;
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + s + "'");
}

std::optional<double> RunConfig::find_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return to_double(it->second, key);
}

void RunConfig::require_known(std::span<const std::string_view> allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

std::vector<double> parse_real_list(std::string_view text) {
  text = trim(text);
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ConfigError("range must be lo:hi:n");
    const double lo = to_double(text.substr(0, c1), "range");
    const double hi = to_double(text.substr(c1 + 1, c2 - c1 - 1), "range");
    const auto n = to_int(text.substr(c2 + 1), "range");
    if (n < 1) throw ConfigError("range needs n >= 1");
    if (n == 1) return {lo};
    for (std::int64_t i = 0; i < n; ++i) {
      out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(to_double(text.substr(0, comma), "list"));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::vector<std::int64_t> parse_int_list(std::string_view text) {
  text = trim(text);
  std::vector<std::int64_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(to_int(text.substr(0, comma), "list"));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

}  // namespace lifebelt
