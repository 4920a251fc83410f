#include "ache/snapshot.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "ache/error.hpp"
#include "ache/io.hpp"

namespace ache {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {
constexpr const char* kMagic = "ACHE-SNAPSHOT v1";
constexpr const char* kLayout = "layout=row-major float64 little-endian";
}  // namespace

void write_snapshot(const std::filesystem::path& path, const Field2D& field, double time,
                    double mu, double nu) {
  std::string out = fmt::format("{}\nnx={} ny={}\ntime={:.17g}\nmu={:.17g} nu={:.17g}\n{}\n", kMagic,
                                field.grid().nx, field.grid().ny, time, mu, nu, kLayout);
  const std::size_t header = out.size();
  out.resize(header + field.size() * sizeof(double));
  std::memcpy(out.data() + header, field.values().data(), field.size() * sizeof(double));
  io::write_atomic(path, out);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  const std::string raw = io::read_text(path);
  std::size_t pos = 0;
  auto next_line = [&](const char* what) {
    const std::size_t nl = raw.find('\n', pos);
    if (nl == std::string::npos)
      throw IoError(fmt::format("{}: truncated header at byte {} (expected {})", path.string(), pos, what));
    std::string line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  auto bad = [&](const char* what) {
    return IoError(fmt::format("{}: malformed header line '{}' before byte {}", path.string(), what, pos));
  };

  if (next_line("magic") != kMagic) throw bad("magic");
  int nx = 0, ny = 0;
  if (std::sscanf(next_line("size").c_str(), "nx=%d ny=%d", &nx, &ny) != 2) throw bad("size");
  double time = 0, mu = 0, nu = 0;
  if (std::sscanf(next_line("time").c_str(), "time=%lf", &time) != 1) throw bad("time");
  if (std::sscanf(next_line("mu nu").c_str(), "mu=%lf nu=%lf", &mu, &nu) != 2) throw bad("mu nu");
  if (next_line("layout") != kLayout) throw bad("layout");

  GridSpec grid(nx, ny);
  if (raw.size() - pos != grid.size() * sizeof(double))
    throw IoError(fmt::format("{}: expected {} payload bytes, found {}", path.string(),
                              grid.size() * sizeof(double), raw.size() - pos));
  std::vector<double> v(grid.size());
  std::memcpy(v.data(), raw.data() + pos, v.size() * sizeof(double));
  return {Field2D(grid, std::move(v)), time, mu, nu};
}

}  // namespace ache
