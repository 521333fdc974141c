#include "psikit/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "psikit/errors.hpp"

namespace psikit {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("CSV_PARSE", context + ": cannot parse number '" + t + "'");
  }
  return v;
}

}  // namespace

int CsvTable::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("IO_NOT_FOUND", "cannot open '" + path + "'");
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("CSV_PARSE", path + ": empty file");
  }
  table.header = split_fields(line);
  if (table.header.empty()) {
    throw ConfigError("CSV_PARSE", path + ": empty header");
  }
  table.columns.resize(table.header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw ConfigError("CSV_PARSE", path + ": row " + std::to_string(row) +
                                         " has " + std::to_string(fields.size()) +
                                         " fields, expected " +
                                         std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      table.columns[c].push_back(
          parse_double(fields[c], path + ": row " + std::to_string(row)));
    }
  }
  return table;
}

std::vector<double> parse_inline_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const std::string t = trim(field);
    if (t.empty()) {
      throw ConfigError("CONFIG_BAD_LIST", "empty entry in list '" + text + "'");
    }
    out.push_back(parse_double(t, "inline list"));
  }
  if (out.empty()) {
    throw ConfigError("CONFIG_BAD_LIST", "empty list");
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace psikit
