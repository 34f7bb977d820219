#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fxts/error.hpp"

namespace fxts {

/// `name[:key=value,...]`. A comma-separated token without '=' extends the
/// previous value, so `q=1,4` is one list-valued key.
struct SpecString {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;

  bool has(std::string_view key) const {
    for (const auto& [k, v] : params)
      if (k == key) return true;
    return false;
  }

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : params)
      if (k == key) return &v;
    return nullptr;
  }

  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const { return has(key) ? get_double(key) : fallback; }
  std::vector<double> get_list(std::string_view key) const;

  bool operator==(const SpecString&) const = default;
};

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  if (text == "inf" || text == "+inf" || text == "infinity") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    detail::fail(ErrorCode::input, "spec", "cannot parse '" + std::string(text) + "' as a number for " + std::string(what));
  }
  return v;
}

inline std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_double(piece, what));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double SpecString::get_double(std::string_view key) const {
  const auto* v = find(key);
  if (v == nullptr) detail::fail(ErrorCode::input, "spec", "'" + name + "' is missing parameter '" + std::string(key) + "'");
  return parse_double(*v, key);
}

inline std::vector<double> SpecString::get_list(std::string_view key) const {
  const auto* v = find(key);
  if (v == nullptr) detail::fail(ErrorCode::input, "spec", "'" + name + "' is missing parameter '" + std::string(key) + "'");
  return parse_double_list(*v, key);
}

inline SpecString parse_spec(std::string_view text) {
  SpecString spec;
  const auto colon = text.find(':');
  spec.name = std::string(text.substr(0, colon));
  if (spec.name.empty()) detail::fail(ErrorCode::input, "spec", "empty name in '" + std::string(text) + "'");
  if (colon == std::string_view::npos) return spec;
  auto rest = text.substr(colon + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const auto token = rest.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) {
      if (spec.params.empty() || token.empty()) {
        detail::fail(ErrorCode::input, "spec", "malformed parameter '" + std::string(token) + "' in '" + std::string(text) + "'");
      }
      spec.params.back().second += "," + std::string(token);
    } else {
      spec.params.emplace_back(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return spec;
}

inline std::string to_string(const SpecString& spec) {
  std::string out = spec.name;
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    out += (i == 0 ? ":" : ",");
    out += spec.params[i].first + "=" + spec.params[i].second;
  }
  return out;
}

}  // namespace fxts
