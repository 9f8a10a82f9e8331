#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kerdisc/errors.hpp"

namespace kerdisc {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline nlohmann::json parse_toml_value(const std::string& raw, std::size_t lineno) {
  const std::string v = trim(raw);
  if (v.empty()) throw parse_error("missing value", lineno);
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw parse_error("unterminated string", lineno);
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']') throw parse_error("unterminated array", lineno);
    nlohmann::json arr = nlohmann::json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    int depth = 0;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (!in_string && c == '[') ++depth;
      if (!in_string && c == ']') --depth;
      if (c == ',' && depth == 0 && !in_string) {
        if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
    return arr;
  }
  try {
    std::size_t used = 0;
    if (v.find_first_of(".eE") == std::string::npos || (v.size() > 1 && v[1] == 'x')) {
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return i;
    }
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw parse_error("cannot parse value '" + v + "'", lineno);
}

}  // namespace detail

/// Minimal TOML reader covering the config surface: comments, [table]
/// headers one level deep, and key = value lines with strings, numbers,
/// booleans, and flat arrays.
inline nlohmann::json parse_toml_lite(std::istream& in) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw parse_error("unterminated table header", lineno);
      const std::string name = detail::trim(s.substr(1, s.size() - 2));
      if (name.empty()) throw parse_error("empty table name", lineno);
      root[name] = nlohmann::json::object();
      current = &root[name];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw parse_error("expected key = value", lineno);
    const std::string key = detail::trim(s.substr(0, eq));
    if (key.empty()) throw parse_error("empty key", lineno);
    (*current)[key] = detail::parse_toml_value(s.substr(eq + 1), lineno);
  }
  return root;
}

/// Loads a config file; .json parses as JSON, anything else as TOML-lite.
inline nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto pos = path.rfind('.');
  if (pos != std::string::npos && path.substr(pos) == ".json") {
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("invalid JSON config: ") + e.what(), 1);
    }
  }
  return parse_toml_lite(in);
}

}  // namespace kerdisc
