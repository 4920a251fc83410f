#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ache::io {

/// Writes to a sibling temp file and renames over the target, so readers
/// never see a partial file. Throws IoError with the path on failure.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest text that round-trips a double (%.17g).
std::string format_double(double x);

/// Simple CSV accumulator; rows are joined with '\n', no quoting.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::span<const double> values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const noexcept { return rows_; }
  const std::string& text() const noexcept { return text_; }
  void write(const std::filesystem::path& path) const { write_atomic(path, text_); }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// Parsed CSV: header plus numeric rows. Used by tests and the sweep reader.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(std::string_view name) const;
};

CsvData read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

}  // namespace ache::io
