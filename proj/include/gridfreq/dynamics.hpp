#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridfreq/grid_model.hpp"

namespace gridfreq {

struct FaultScenario {
  BusId bus = 0;
  // Lost power, in the grid's power unit.
  double delta_p = 0.0;
  double t_sim = 5.0;
  double dt = 0.5;
  int n_sim = 10;
  // Upper bound on the internal integration step; zero means dt / 50.
  double h = 0.0;

  void check() const;
  double max_step() const;
};

enum class DynamicsModel { nonlinear, linearized };

struct SimulationOptions {
  DynamicsModel model = DynamicsModel::nonlinear;
  double rtol = 1e-10;
  double atol = 1e-12;
  // Extra trajectory samples every `output_step` seconds; zero samples at multiples of dt only.
  double output_step = 0.0;
};

// Rows are sample times, columns follow grid.buses.
struct Trajectory {
  std::vector<double> times;
  std::vector<BusId> bus_ids;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd omega;
};

// P_i - sum_j B_ij V_i V_j sin(theta_i - theta_j).
Eigen::VectorXd power_flow_residual(const GridModel& grid, const Eigen::VectorXd& theta);

// Newton on the power flow with the slack angle fixed, started from the DC solution.
Eigen::VectorXd steady_state(const GridModel& grid);

// Generator at `bus` loses delta_p and its inertia; damping is kept.
GridModel apply_fault(const GridModel& grid, const FaultScenario& scenario);

// Adds delta_p to the setpoint of `bus` and leaves everything else alone.
GridModel apply_power_step(const GridModel& grid, BusId bus, double delta_p);

// Integrates from (theta0, omega = 0) and samples at the given times (first sample at t = 0 is the
// pre-fault state).
Trajectory simulate_at(const GridModel& faulted, const Eigen::VectorXd& theta0, const std::vector<double>& times,
                       double max_step, const SimulationOptions& options = {});

Trajectory simulate(const GridModel& faulted, const Eigen::VectorXd& theta0, const FaultScenario& scenario,
                    const SimulationOptions& options = {});

// All faults act at t = 0; they must share the time grid and hit distinct generators.
Trajectory simulate_multi_fault(const GridModel& grid, const Eigen::VectorXd& theta0,
                                const std::vector<FaultScenario>& faults, const SimulationOptions& options = {});

// r_i(k dt) = [omega_i((k+1) dt) - omega_i(k dt)] / (2 pi dt), k = 0..n_sim-1, in Hz/s.
Eigen::MatrixXd rocof_series(const Trajectory& trajectory, double dt, int n_sim);
Eigen::MatrixXd rocof_series(const Trajectory& trajectory, double dt);

double disturbance_magnitude(const Eigen::MatrixXd& rocof);
// Sum restricted to columns with mask[i] set.
double disturbance_magnitude(const Eigen::MatrixXd& rocof, const std::vector<bool>& mask);

struct Frame {
  int k = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  Eigen::VectorXd rocof;
};
std::vector<Frame> snapshot_frames(const Trajectory& trajectory, double dt, int n_sim);

struct FaultRun {
  Trajectory trajectory;
  Eigen::MatrixXd rocof;
  double magnitude = 0.0;
  double magnitude_generators = 0.0;
};

// apply_fault, simulate, rocof_series and disturbance_magnitude in one go.
FaultRun run_fault(const GridModel& grid, const Eigen::VectorXd& theta0, const FaultScenario& scenario,
                   const SimulationOptions& options = {});
FaultRun run_faults(const GridModel& grid, const Eigen::VectorXd& theta0, const std::vector<FaultScenario>& faults,
                    const SimulationOptions& options = {});

// Generator buses of the pre-fault grid.
std::vector<bool> generator_mask(const GridModel& grid);

}  // namespace gridfreq
