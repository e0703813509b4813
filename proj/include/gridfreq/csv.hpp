#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridfreq {

// Header-driven CSV table. Errors name the file, the line and the field.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(const std::string& text, const std::string& source);

  std::size_t rows() const { return rows_.size(); }
  bool has_column(const std::string& name) const;
  void require_columns(const std::vector<std::string>& names) const;

  const std::string& text(std::size_t row, const std::string& column) const;
  std::optional<std::string> optional_text(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;
  std::optional<double> optional_number(std::size_t row, const std::string& column) const;
  std::int64_t integer(std::size_t row, const std::string& column) const;

  // 1-based line number of a data row in the source file.
  std::size_t line(std::size_t row) const { return lines_.at(row); }
  [[noreturn]] void fail(std::size_t row, const std::string& column, const std::string& message) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
  std::size_t column(const std::string& name) const;
};

std::vector<std::string> split_csv_line(const std::string& line);

// %.17g, so values round-trip exactly.
std::string format_double(double value);

}  // namespace gridfreq
