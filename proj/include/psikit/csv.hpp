#pragma once

#include <string>
#include <vector>

namespace psikit {

// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // one vector per header entry

  // Index of a named column, -1 if absent.
  int find_column(const std::string& name) const;
};

// Throws ConfigError with code IO_NOT_FOUND / CSV_PARSE.
CsvTable read_csv(const std::string& path);

// "a,b,c" -> doubles; throws ConfigError (CONFIG_BAD_LIST) on junk.
std::vector<double> parse_inline_list(const std::string& text);

// Fixed 17-significant-digit decimal, locale independent.
std::string format_number(double v);

}  // namespace psikit
