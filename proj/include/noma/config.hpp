#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "noma/errors.hpp"

namespace noma {

// Flat `key = value` configuration. '#' starts a comment; blank lines are
// ignored; a repeated key overrides the earlier value.
using KeyValueConfig = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline KeyValueConfig parse_key_value(std::istream& is) {
  KeyValueConfig out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

inline KeyValueConfig load_key_value_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  return parse_key_value(is);
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(std::string(what) + ": not a number: '" + t + "'");
  return v;
}

inline std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::string item;
  std::istringstream is{std::string(text)};
  while (std::getline(is, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

/// SNR grid from "a,b,c" or the range form "start:step:stop" (inclusive).
inline std::vector<double> parse_snr_grid(std::string_view text) {
  const std::string t = trim(text);
  if (std::count(t.begin(), t.end(), ':') == 2) {
    const auto p1 = t.find(':');
    const auto p2 = t.find(':', p1 + 1);
    const double start = parse_double(t.substr(0, p1), "snr grid");
    const double step = parse_double(t.substr(p1 + 1, p2 - p1 - 1), "snr grid");
    const double stop = parse_double(t.substr(p2 + 1), "snr grid");
    if (!(step > 0.0) || stop < start) throw ConfigError("snr grid: need step > 0 and stop >= start");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  return parse_double_list(t, "snr grid");
}

}  // namespace noma
