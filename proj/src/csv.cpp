#include "gridfreq/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridfreq/error.hpp"

namespace gridfreq {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

CsvTable CsvTable::parse(const std::string& text, const std::string& source) {
  CsvTable table;
  table.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header_ = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() > table.header_.size())
      throw InputError(source + ":" + std::to_string(number) + ": expected " + std::to_string(table.header_.size()) +
                       " fields, got " + std::to_string(fields.size()));
    fields.resize(table.header_.size());
    table.rows_.push_back(std::move(fields));
    table.lines_.push_back(number);
  }
  if (!have_header) throw InputError(source + ": missing header row");
  return table;
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

void CsvTable::require_columns(const std::vector<std::string>& names) const {
  for (const auto& name : names) {
    if (!has_column(name)) throw InputError(source_ + ":1: missing column '" + name + "'");
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw InputError(source_ + ":1: missing column '" + name + "'");
}

void CsvTable::fail(std::size_t row, const std::string& column, const std::string& message) const {
  throw InputError(source_ + ":" + std::to_string(lines_.at(row)) + ": field '" + column + "': " + message);
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
  const auto& value = rows_.at(row)[column(name)];
  if (value.empty()) fail(row, name, "missing value");
  return value;
}

std::optional<std::string> CsvTable::optional_text(std::size_t row, const std::string& name) const {
  if (!has_column(name)) return std::nullopt;
  const auto& value = rows_.at(row)[column(name)];
  if (value.empty()) return std::nullopt;
  return value;
}

namespace {

std::optional<double> to_double(const std::string& s) {
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

double CsvTable::number(std::size_t row, const std::string& name) const {
  const auto& value = text(row, name);
  auto parsed = to_double(value);
  if (!parsed || !std::isfinite(*parsed)) fail(row, name, "not a number: '" + value + "'");
  return *parsed;
}

std::optional<double> CsvTable::optional_number(std::size_t row, const std::string& name) const {
  auto value = optional_text(row, name);
  if (!value) return std::nullopt;
  return number(row, name);
}

std::int64_t CsvTable::integer(std::size_t row, const std::string& name) const {
  const auto& value = text(row, name);
  std::int64_t parsed = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, parsed);
  if (ec != std::errc() || ptr != end) fail(row, name, "not an integer: '" + value + "'");
  return parsed;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace gridfreq
