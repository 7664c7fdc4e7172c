#pragma once

#include "nf/grid.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace nf {

inline constexpr int kSchemaVersion = 1;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const Table& t);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Binary snapshot file:
//   8 bytes  magic "NFSNAP01"
//   u32      format version (1)
//   f64      half_length, f64 spacing, u32 n_points   (grid)
//   u32      rows, u32 cols (cols == n_points)
//   f64[rows] times
//   f64[rows*cols] values, row-major
// Everything little-endian.
void write_snapshots(const std::string& path, const GridSpec& g, const std::vector<double>& times,
                     const std::vector<Vec>& rows);

struct SnapshotFile {
  GridSpec grid;
  std::vector<double> times;
  std::vector<Vec> rows;
};
SnapshotFile read_snapshots(const std::string& path);

void ensure_dir(const std::string& dir);

}  // namespace nf
