#include "tadkit/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tadkit/errors.hpp"

namespace tadkit {

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  int c = column(name);
  if (c < 0) throw DataError("missing required column '" + name + "'");
  return c;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  // Character-level state machine so quoted fields may contain commas,
  // escaped quotes, and newlines — everything write_csv can emit.
  CsvTable t;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool record_open = false;
  bool have_header = false;
  std::size_t lineno = 1, record_line = 1;

  auto end_record = [&] {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    record_open = false;
    if (fields.empty() && field.empty()) return;  // blank or CR-only line
    fields.push_back(std::move(field));
    field.clear();
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header.size()) {
        throw DataError(origin + ":" + std::to_string(record_line) + ": expected " +
                        std::to_string(t.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
      }
      t.rows.push_back(std::move(fields));
    }
    fields.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++lineno;
        field += c;
      }
      continue;
    }
    if (c == '\n') {
      ++lineno;
      if (record_open) end_record();
      continue;
    }
    if (!record_open) {
      record_open = true;
      record_line = lineno;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) {
    throw DataError(origin + ":" + std::to_string(record_line) + ": unterminated quoted field");
  }
  if (record_open) end_record();
  if (!have_header) throw DataError(origin + ": empty CSV");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), path);
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  auto write_row = [&f](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) f << ',';
      bool need_quote = row[i].find_first_of(",\"\n") != std::string::npos;
      if (need_quote) {
        f << '"';
        for (char c : row[i]) {
          if (c == '"') f << '"';
          f << c;
        }
        f << '"';
      } else {
        f << row[i];
      }
    }
    f << '\n';
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
}

std::string format_double(double v) {
  // Shortest representation that round-trips a float64.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  if (s.empty()) throw DataError(context + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) {
    throw DataError(context + ": cannot parse '" + s + "' as number");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& context) {
  if (s.empty()) throw DataError(context + ": empty integer field");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) {
    throw DataError(context + ": cannot parse '" + s + "' as integer");
  }
  return v;
}

}  // namespace tadkit
