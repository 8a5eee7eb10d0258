#pragma once

// Minimal RFC 4180 CSV writing and reading.

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "entprof/error.hpp"

namespace entprof {

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

/// Shortest text that reads back to the same double.
inline std::string csv_number(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

inline std::string csv_number(std::optional<double> v) { return v ? csv_number(*v) : std::string("n/a"); }

/// Reads one record, honoring quoted fields that span lines. Returns false
/// at end of input.
inline bool read_csv_row(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) fail(ErrorCode::kMalformedLine, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return true;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    fail(ErrorCode::kSchemaViolation, "missing CSV column '" + std::string(name) + "'");
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  if (!read_csv_row(in, t.header)) fail(ErrorCode::kEmptyInput, "empty CSV");
  std::vector<std::string> row;
  std::size_t line = 1;
  while (read_csv_row(in, row)) {
    ++line;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != t.header.size()) {
      fail(ErrorCode::kMalformedLine, "CSV row " + std::to_string(line) + " has " + std::to_string(row.size()) +
                                          " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace entprof
