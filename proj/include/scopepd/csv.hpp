#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scopepd/error.hpp"

namespace scopepd::csv {

using Row = std::vector<std::string>;

// Splits one CSV record. Handles double-quoted fields with embedded commas
// and doubled quotes; does not support newlines inside quotes.
inline Row split_line(std::string_view line) {
  Row fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct Table {
  Row header;
  std::vector<Row> rows;

  // Column position by name, or throws.
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ValidationError("CSV is missing column '" + std::string(name) + "'");
  }
};

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    Row r = split_line(line);
    if (first) {
      t.header = std::move(r);
      first = false;
      continue;
    }
    if (r.size() != t.header.size()) {
      throw ValidationError("CSV line " + std::to_string(line_no) + " has " +
                            std::to_string(r.size()) + " fields, expected " +
                            std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(r));
  }
  if (first) throw ValidationError("CSV input is empty");
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open '" + path + "' for reading");
  return read(in);
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << quote(row[i]);
  }
  out << '\n';
}

inline void write(std::ostream& out, const Table& t) {
  write_row(out, t.header);
  for (const auto& r : t.rows) write_row(out, r);
}

inline void write_file(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write(out, t);
}

// Shortest round-trippable decimal form of a double.
// Missing (NaN) values are written as an empty field.
inline std::string format_number(double v) {
  if (v != v) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  // Prefer the shorter representation when it parses back exactly.
  for (int p = 1; p < 17; ++p) {
    std::ostringstream t;
    t.precision(p);
    t << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return s;
}

}  // namespace scopepd::csv
