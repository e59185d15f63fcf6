#pragma once

// RFC 4180 CSV reading and writing.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace dcp::io {

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;   // 1-based source line of each row

  /// Index of a header column; throws InvalidInput naming the source when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  /// Parses a cell as double; errors name the source line and column.
  double number(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Shortest round-trip representation.
std::string format_number(double value);
/// Fixed decimals.
std::string format_fixed(double value, int decimals);

}  // namespace dcp::io
