#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kerdisc/errors.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

enum class SampleFormat { Csv, Jsonl };

/// Picks the format from the file extension; anything but .jsonl is CSV.
inline SampleFormat format_from_path(const std::string& path) {
  const auto pos = path.rfind('.');
  if (pos != std::string::npos && path.substr(pos) == ".jsonl") return SampleFormat::Jsonl;
  return SampleFormat::Csv;
}

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(*(last - 1)))) --last;
  if (first == last) return false;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline SampleBatch load_samples(std::istream& in, SampleFormat format) {
  std::vector<double> values;
  std::size_t d = 0, n = 0, lineno = 0;
  std::string line;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (format == SampleFormat::Csv) {
      const auto fields = detail::split_csv_line(line);
      std::vector<double> row;
      row.reserve(fields.size());
      bool numeric = true;
      for (const auto& f : fields) {
        double v;
        if (!detail::parse_double(f, v)) {
          numeric = false;
          break;
        }
        row.push_back(v);
      }
      if (!numeric) {
        // a single non-numeric first line is a header; later ones are errors
        if (first_data_line) {
          first_data_line = false;
          continue;
        }
        throw parse_error("non-numeric cell", lineno);
      }
      first_data_line = false;
      if (d == 0) d = row.size();
      if (row.size() != d)
        throw parse_error("ragged row: expected " + std::to_string(d) + " columns, got " +
                              std::to_string(row.size()),
                          lineno);
      values.insert(values.end(), row.begin(), row.end());
      ++n;
    } else {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what(), lineno);
      }
      if (!j.is_array()) throw parse_error("expected a JSON array of numbers", lineno);
      std::vector<double> row;
      row.reserve(j.size());
      for (const auto& v : j) {
        if (!v.is_number()) throw parse_error("non-numeric JSON element", lineno);
        row.push_back(v.get<double>());
      }
      if (d == 0) d = row.size();
      if (row.size() != d)
        throw parse_error("ragged row: expected " + std::to_string(d) + " values, got " +
                              std::to_string(row.size()),
                          lineno);
      values.insert(values.end(), row.begin(), row.end());
      ++n;
    }
  }
  if (n == 0 || d == 0) throw parse_error("no samples found", lineno == 0 ? 1 : lineno);
  return SampleBatch(std::move(values), n, d);
}

inline SampleBatch load_samples(const std::string& path, SampleFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_samples(in, format);
}

inline SampleBatch load_samples(const std::string& path) {
  return load_samples(path, format_from_path(path));
}

inline void save_samples(const SampleBatch& batch, std::ostream& out, SampleFormat format) {
  for (std::size_t i = 0; i < batch.n; ++i) {
    if (format == SampleFormat::Csv) {
      for (std::size_t j = 0; j < batch.d; ++j) {
        if (j) out << ',';
        out << detail::format_g17(batch(i, j));
      }
      out << '\n';
    } else {
      out << '[';
      for (std::size_t j = 0; j < batch.d; ++j) {
        if (j) out << ',';
        out << detail::format_g17(batch(i, j));
      }
      out << "]\n";
    }
  }
}

inline void save_samples(const SampleBatch& batch, const std::string& path, SampleFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_samples(batch, out, format);
}

inline void save_samples(const SampleBatch& batch, const std::string& path) {
  save_samples(batch, path, format_from_path(path));
}

}  // namespace kerdisc
