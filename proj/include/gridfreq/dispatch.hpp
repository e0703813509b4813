#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridfreq/grid_model.hpp"

namespace gridfreq {

// Highest-capacity generator bus from the generator records; falls back to the generator bus
// with the largest setpoint, then to the first bus. Ties go to the lowest id.
BusId slack_bus(const GridModel& grid);

// Solves L theta = P with theta_slack = 0.
Eigen::VectorXd dc_power_flow(const GridModel& grid, const Eigen::VectorXd& injections);
Eigen::VectorXd dc_power_flow(const GridModel& grid, const Eigen::VectorXd& injections, BusId slack);

struct DispatchProblem {
  GridModel grid;
  // Per-bus demand, positive, in the grid's power unit.
  Eigen::VectorXd loads;
  // Capacity bound [0, rated_power] and cost marginal_cost per record.
  std::vector<GeneratorRecord> generators;
  // Per-line flow limit in the grid's power unit, aligned with grid.lines. Empty disables limits.
  std::vector<double> line_limits;
};

struct DispatchResult {
  // Output per generator record.
  std::vector<double> output;
  Eigen::VectorXd injections;
  Eigen::VectorXd angles;
  // $/h with costs in $/MWh.
  double objective = 0.0;
  BusId slack = 0;
};

DispatchResult economic_dispatch(const DispatchProblem& problem);

// min c^T x subject to A_eq x = b_eq, A_ub x <= b_ub, x >= 0. Dense two-phase simplex with Bland's rule.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
};
Eigen::VectorXd solve_lp(const LinearProgram& lp);

}  // namespace gridfreq
