#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/dispatch.hpp"
#include "gridfreq/ingestion.hpp"

namespace gridfreq {

struct AssemblyConfig {
  DampingConfig damping;
  // Per-line limits passed to the dispatch; empty disables them.
  std::vector<double> line_limits;
  // Buses left with zero damping get this fraction of the median positive damping.
  double damping_floor_fraction = 0.01;
};

struct AssemblyReport {
  DispatchResult dispatch;
  std::vector<std::string> warnings;
};

// Dispatch, then setpoints, inertia and damping for every bus. Generators dispatched at zero are
// offline and contribute no inertia or damping.
GridModel assemble_operating_point(const GridModel& raw, const Eigen::VectorXd& loads, const AssemblyConfig& config,
                                   AssemblyReport* report = nullptr);

}  // namespace gridfreq
