#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascade/scenario.hpp"

namespace cascade {

inline constexpr int kTableSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "0.1.0";

struct RunOptions {
  std::optional<std::string> out_dir;
  /// Worker threads over grid points; 0 means hardware concurrency.
  unsigned jobs = 0;
  std::optional<std::uint64_t> seed;
  bool render = false;
};

struct RunReport {
  std::string table_path;
  std::string manifest_path;
  std::size_t rows = 0;
  std::size_t ok_rows = 0;
  std::size_t failed_rows = 0;
  /// Rows found already complete in an existing table and not recomputed.
  std::size_t resumed_rows = 0;
  double wall_seconds = 0.0;
  int exit_code = 0;
};

struct GridPoint {
  std::size_t index = 0;
  std::optional<double> n_last;
  std::optional<double> drive;
  double delta = 0.0;
};

/// Outer axis (n_last or drive) slowest, delta fastest.
std::vector<GridPoint> grid_points(const Scenario& s);

/// Header of results.tsv for this scenario.
std::vector<std::string> table_columns(const Scenario& s);

/// One table row (cells in `table_columns` order) for a grid point.
std::vector<std::string> evaluate_point(const Scenario& s, const GridPoint& point);

/// Runs the sweep, writing results.tsv, manifest.json, and (when requested)
/// bistability.tsv, folds.tsv and PPM images into the output directory.
RunReport run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Binary PPM heatmap of `values` (rows: outer axis, bottom to top; columns:
/// delta, left to right) on a diverging scale centred at `level`, with the
/// level contour drawn in black and NaN cells in grey.
void write_heatmap_ppm(const std::string& path, const Eigen::MatrixXd& values, double level = 1.0);

/// Sequential-scale PPM of a Wigner grid (x horizontal, p vertical).
void write_wigner_ppm(const std::string& path, const Eigen::MatrixXd& values);

}  // namespace cascade
