#pragma once

#include <filesystem>

#include "ache/field.hpp"

namespace ache {

struct Snapshot {
  Field2D field;
  double time = 0.0;
  double mu = 0.0;
  double nu = 0.0;
};

// Five text header lines, then nx*ny little-endian float64 values with the
// row index along x2.
void write_snapshot(const std::filesystem::path& path, const Field2D& field, double time,
                    double mu, double nu);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace ache
