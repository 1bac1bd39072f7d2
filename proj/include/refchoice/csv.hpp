#pragma once

// Minimal CSV layer for the two tabular schemas. Values never contain commas
// or quotes, so no quoting rules are needed; doubles are written with
// shortest-round-trip formatting so a write/load cycle is value-exact.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "refchoice/errors.hpp"

namespace refchoice {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, ptr);
}

class CsvTable {
 public:
  CsvTable(std::istream& in, std::string source) : source_(std::move(source)) {
    std::string line;
    if (!std::getline(in, line))
      throw ParseError(source_, 1, "missing header row");
    header_ = split(line);
    for (std::size_t i = 0; i < header_.size(); ++i) col_[header_[i]] = i;
    std::size_t row_no = 2;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        ++row_no;
        continue;
      }
      auto fields = split(line);
      if (fields.size() != header_.size())
        throw ParseError(source_, row_no,
                         "expected " + std::to_string(header_.size()) +
                             " fields, got " + std::to_string(fields.size()));
      rows_.push_back(std::move(fields));
      row_numbers_.push_back(row_no);
      ++row_no;
    }
  }

  static CsvTable from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return CsvTable(in, path);
  }

  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t file_row(std::size_t i) const { return row_numbers_[i]; }

  void require_columns(const std::vector<std::string>& names) const {
    for (const auto& n : names)
      if (!col_.count(n))
        throw ParseError(source_, 1, "missing column '" + n + "'");
  }

  const std::string& cell(std::size_t row, const std::string& name) const {
    auto it = col_.find(name);
    if (it == col_.end())
      throw ParseError(source_, file_row(row), "no column '" + name + "'");
    return rows_[row][it->second];
  }

  double num(std::size_t row, const std::string& name) const {
    const std::string& s = cell(row, name);
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ParseError(source_, file_row(row),
                       "column '" + name + "': bad number '" + s + "'");
    return v;
  }

  std::int64_t integer(std::size_t row, const std::string& name) const {
    const std::string& s = cell(row, name);
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ParseError(source_, file_row(row),
                       "column '" + name + "': bad integer '" + s + "'");
    return v;
  }

  // Optional numeric cell; empty means absent.
  std::optional<double> opt_num(std::size_t row, const std::string& name) const {
    if (cell(row, name).empty()) return std::nullopt;
    return num(row, name);
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        out.push_back(line.substr(start));
        break;
      }
      out.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    return out;
  }

  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> col_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> row_numbers_;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header)
      : header_(std::move(header)) {
    append_row(header_);
  }

  void append_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

  void write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << out_.str();
  }

 private:
  std::vector<std::string> header_;
  std::ostringstream out_;
};

}  // namespace refchoice
