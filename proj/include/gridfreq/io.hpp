#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/dispatch.hpp"
#include "gridfreq/dynamics.hpp"
#include "gridfreq/grid_model.hpp"
#include "gridfreq/spectral.hpp"

namespace gridfreq {

// Canonical grid artifact: buses.csv, lines.csv, generators.csv and meta.json in a directory. Values are written
// with full precision so a read returns the same grid.
void write_grid(const GridModel& grid, const std::filesystem::path& directory);
GridModel read_grid(const std::filesystem::path& directory);

inline const std::vector<std::string> kGridFiles{"buses.csv", "lines.csv", "generators.csv", "meta.json"};

std::string trajectory_csv(const Trajectory& trajectory);
std::string rocof_csv(const Eigen::MatrixXd& rocof, const std::vector<BusId>& bus_ids, double magnitude);
std::string frame_geojson(const GridModel& grid, const Frame& frame);
std::string modes_csv(const Modes& modes, const std::vector<BusId>& bus_ids);
std::string dispatch_csv(const GridModel& grid, const DispatchResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gridfreq
