#include "ache/io.hpp"

#include <fmt/format.h>

#include <atomic>
#include <fstream>
#include <limits>
#include <sstream>

#include "ache/error.hpp"

namespace ache::io {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned long> counter{0};
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvTable::add_row(std::span<const double> values) {
  if (values.size() != columns_) throw ParameterError("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
  ++rows_;
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ParameterError("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  ++rows_;
}

std::size_t CsvData::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("missing column '" + std::string(name) + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvData read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvData d;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv " + path.string());
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) d.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

}  // namespace ache::io
