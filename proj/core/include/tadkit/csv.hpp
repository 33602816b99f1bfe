#pragma once

#include <string>
#include <vector>

namespace tadkit {

// Minimal CSV layer: comma separator, "." decimal point, UTF-8 passthrough,
// double-quote quoting on read. Numeric output uses shortest round-trip
// formatting so identical inputs reproduce byte-identical files.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;        // -1 if absent
  int require_column(const std::string& name) const;  // DataError if absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::string& path, const CsvTable& table);

std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

}  // namespace tadkit
