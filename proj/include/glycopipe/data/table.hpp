// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "glycopipe/common.hpp"

namespace glycopipe::data {

enum class ColumnType { integer, real, text };

inline const char* to_string(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
    case ColumnType::text: return "text";
  }
  return "?";
}

// monostate is the null cell.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

// Numeric view of a cell; nullopt for null or text.
inline std::optional<double> as_number(const Cell& c) {
  if (auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&c)) return *d;
  return std::nullopt;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<ColumnType> types;  // one per header column
  std::vector<std::vector<Cell>> rows;

  std::size_t column_count() const { return header.size(); }
  std::size_t row_count() const { return rows.size(); }

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    return std::nullopt;
  }
};

namespace detail {

inline bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

// Splits one logical record honoring double-quoted fields. Advances pos past
// the record terminator. Returns false at end of input.
inline bool next_record(std::string_view text, std::size_t& pos, char delim,
                        std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char ch = text[pos];
    if (quoted) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      ++pos;
      continue;
    }
    if (ch == '"') {
      quoted = true;
      ++pos;
    } else if (ch == delim) {
      fields.push_back(std::move(field));
      field.clear();
      ++pos;
    } else if (ch == '\n' || ch == '\r') {
      ++pos;
      if (ch == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      break;
    } else {
      field.push_back(ch);
      ++pos;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

inline bool needs_quoting(std::string_view s, char delim) {
  for (char c : s)
    if (c == delim || c == '"' || c == '\n' || c == '\r') return true;
  return false;
}

}  // namespace detail

// First record is the header. Column types are inferred in a first pass as the
// narrowest of integer, real, text covering every non-empty cell; the second
// pass converts cells. Blank lines are skipped.
inline RawTable parse_table(std::string_view text, char delim = ',') {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::size_t pos = 0;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (detail::next_record(text, pos, delim, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    records.push_back(fields);
  }
  require(!records.empty(), "empty input: no header row");

  RawTable table;
  table.header = records.front();
  const std::size_t width = table.header.size();
  for (std::size_t r = 1; r < records.size(); ++r)
    require(records[r].size() == width, "ragged row at row ", r, ": expected ", width,
            " fields, found ", records[r].size());

  table.types.assign(width, ColumnType::integer);
  for (std::size_t j = 0; j < width; ++j) {
    ColumnType t = ColumnType::integer;
    for (std::size_t r = 1; r < records.size() && t != ColumnType::text; ++r) {
      const std::string& s = records[r][j];
      if (s.empty()) continue;
      std::int64_t iv;
      double dv;
      if (t == ColumnType::integer && detail::parse_int(s, iv)) continue;
      if (detail::parse_real(s, dv)) {
        t = ColumnType::real;
        continue;
      }
      t = ColumnType::text;
    }
    table.types[j] = t;
  }

  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<Cell> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      const std::string& s = records[r][j];
      if (s.empty()) continue;
      switch (table.types[j]) {
        case ColumnType::integer: {
          std::int64_t v = 0;
          detail::parse_int(s, v);
          row[j] = v;
          break;
        }
        case ColumnType::real: {
          double v = 0;
          detail::parse_real(s, v);
          row[j] = v;
          break;
        }
        case ColumnType::text: row[j] = s; break;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline std::string format_cell(const Cell& c) {
  if (auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

inline std::string write_table(const RawTable& table, char delim = ',') {
  std::string out;
  auto emit = [&](std::string_view s) {
    if (detail::needs_quoting(s, delim)) {
      out.push_back('"');
      for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out.append(s);
    }
  };
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out.push_back(delim);
    emit(table.header[j]);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    require(row.size() == table.header.size(), "row width does not match header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out.push_back(delim);
      emit(format_cell(row[j]));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace glycopipe::data
