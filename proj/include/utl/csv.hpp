#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "utl/errors.hpp"

namespace utl {

/// Reals in 17 significant digits (exact round trip for binary64).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Header, rows, and `#`-prefixed provenance lines.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    std::set<std::string> seen(header_.begin(), header_.end());
    if (seen.size() != header_.size()) throw Error("CsvTable: duplicate column names");
  }

  void add_comment(std::string line) { comments_.push_back(std::move(line)); }

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw Error("CsvTable: row has " + std::to_string(row.size()) + " fields, header has " +
                  std::to_string(header_.size()));
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& comments() const { return comments_; }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw Error("CsvTable: no column '" + name + "'");
  }

  void write(std::ostream& os) const {
    for (const auto& c : comments_) os << "# " << c << '\n';
    write_line(os, header_);
    for (const auto& r : rows_) write_line(os, r);
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot open " + path + " for writing");
    write(os);
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << fields[i];
    }
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> comments_;
};

}  // namespace utl
