#pragma once

// RFC 4180 CSV: comma delimiter, double-quote quoting, CRLF or LF line ends.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ebrl/model.hpp"

namespace ebrl {

/// Parses CSV text. The first row is the header. Errors name the line.
inline RawTable parseCsv(std::string_view text) {
  RawTable t;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool have_header = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!have_header) {
      t.header = std::move(row);
      have_header = true;
    } else if (!(row.size() == 1 && row[0].empty())) {  // skip blank lines
      if (row.size() != t.header.size())
        throw IngestError("line " + std::to_string(row_line) + ": expected " +
                          std::to_string(t.header.size()) + " columns, found " + std::to_string(row.size()));
      t.rows.push_back(std::move(row));
    }
    row.clear();
  };

  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // BOM
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started)
          throw IngestError("line " + std::to_string(line) + ": quote inside an unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field += ch;
        field_started = true;
    }
  }
  if (quoted) throw IngestError("line " + std::to_string(row_line) + ": unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  if (!have_header) throw IngestError("empty CSV: no header row");
  return t;
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RawTable readCsv(const std::string& path) {
  try {
    return parseCsv(readFile(path));
  } catch (const IngestError& e) {
    throw IngestError(path + ": " + e.what());
  }
}

inline std::string csvEscape(std::string_view v) {
  if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void writeCsvRow(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out << ',';
    out << csvEscape(row[k]);
  }
  out << '\n';
}

}  // namespace ebrl
