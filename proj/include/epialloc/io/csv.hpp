#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "epialloc/core/error.hpp"

namespace epialloc::io {

/// Full double precision, 17 significant digits.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;  // optional leading text column, one per row

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw StructuralError("csv: no column '" + std::string(name) + "'");
  }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    const auto& r = t.rows[j];
    const bool label = j < t.labels.size();
    if (label) os << t.labels[j];
    for (std::size_t i = 0; i < r.size(); ++i) os << (i || label ? "," : "") << fmt(r[i]);
    os << '\n';
  }
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw StructuralError("csv: empty input");
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw StructuralError("csv: ragged row");
    std::vector<double> r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} || res.ptr != c.data() + c.size()) {
        // A non-numeric first cell is a row label, as long as every row has one.
        if (i == 0 && t.labels.size() == t.rows.size()) {
          t.labels.push_back(c);
          continue;
        }
        throw StructuralError("csv: bad number '" + c + "'");
      }
      r.push_back(v);
    }
    if (!t.labels.empty() && t.labels.size() != t.rows.size() + 1) throw StructuralError("csv: mixed labelled rows");
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline void save_csv(const std::string& path, const CsvTable& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  write_csv(os, t);
}

inline CsvTable load_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path);
  return read_csv(is);
}

}  // namespace epialloc::io
