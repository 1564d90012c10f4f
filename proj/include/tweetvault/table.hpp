#pragma once

// Tabular command output as CSV (RFC 4180 quoting), TSV (backslash escapes)
// or a JSON array of objects.

#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tweetvault/tweet.hpp"

namespace tweetvault {

enum class TableFormat { kCsv, kTsv, kJson };

inline TableFormat parse_table_format(std::string_view s) {
  if (s == "csv") return TableFormat::kCsv;
  if (s == "tsv") return TableFormat::kTsv;
  if (s == "json") return TableFormat::kJson;
  throw std::invalid_argument("unknown format '" + std::string(s) + "' (expected csv, tsv or json)");
}

// Cells are JSON scalars; null renders as an empty field in CSV and TSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match columns");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string cell_text(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string tsv_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline void write_table(std::ostream& os, const Table& t, TableFormat f, bool header = true) {
  if (f == TableFormat::kJson) {
    json arr = json::array();
    for (const auto& row : t.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = row[i];
      arr.push_back(std::move(obj));
    }
    os << arr.dump(2) << '\n';
    return;
  }
  const char sep = f == TableFormat::kCsv ? ',' : '\t';
  auto field = [&](const std::string& s) { return f == TableFormat::kCsv ? detail::csv_field(s) : detail::tsv_field(s); };
  if (header) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? std::string(1, sep) : "") << field(t.columns[i]);
    os << '\n';
  }
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? std::string(1, sep) : "") << field(detail::cell_text(row[i]));
    os << '\n';
  }
}

}  // namespace tweetvault
