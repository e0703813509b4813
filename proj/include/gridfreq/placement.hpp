#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/random.hpp"

namespace gridfreq {

enum class Procedure { uniform, fiedler, non_fiedler, custom };

std::string_view to_string(Procedure procedure);
Procedure parse_procedure(std::string_view name);

struct PlacementProcedure {
  Procedure kind = Procedure::uniform;
  double epsilon_floor = 1e-9;
  // Per-bus weights for Procedure::custom.
  Eigen::VectorXd custom_weights;
};

// Normalized p^U, p^F or p^nF from u_2i^2 of the eligible buses.
Eigen::VectorXd sampling_weights(const Eigen::VectorXd& u2_squared, const PlacementProcedure& procedure);

// Per-bus weights over the generator buses of `grid`, zero elsewhere.
Eigen::VectorXd sampling_weights(const GridModel& grid, const Eigen::VectorXd& fiedler_weight,
                                 const PlacementProcedure& procedure);

enum class Direction { remove, add };

struct InertiaStep {
  // Each addition draw adds this fraction of the bus's reference inertia.
  double increment_fraction = 0.1;
  // Lower bound on an increment, as a fraction of the mean reference generator inertia.
  double base_unit_fraction = 0.01;
};

// Reference inertia per bus: the inertia of the unmodified grid.
Eigen::VectorXd bus_inertia(const GridModel& grid);

GridModel modify_inertia(const GridModel& grid, const Eigen::VectorXd& weights, double target_m_sys,
                         Direction direction, Rng& rng, const Eigen::VectorXd& reference_inertia,
                         const InertiaStep& step = {});

// Moves `amount` of inertia with paired draws: one unit removed by `from_weights`, the same
// unit added by `to_weights`. System inertia is unchanged.
GridModel transfer_inertia(const GridModel& grid, const Eigen::VectorXd& from_weights,
                           const Eigen::VectorXd& to_weights, double amount, Rng& rng,
                           const Eigen::VectorXd& reference_inertia, const InertiaStep& step = {});

struct SweepPoint {
  std::string procedure;
  std::uint64_t seed = 0;
  double m_sys = 0.0;
  BusId fault_bus = 0;
  double u2b_squared = 0.0;
  double magnitude = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  int workers = 1;
  SimulationOptions simulation;
  InertiaStep step;
};

// Walks the levels in order from the current system inertia, modifying the previous level's grid,
// and runs every fault on every level.
SweepResult sweep_inertia(const GridModel& grid, const PlacementProcedure& procedure, const std::vector<double>& levels,
                          const std::vector<FaultScenario>& faults, std::uint64_t seed,
                          const SweepOptions& options = {});

// System inertia in GW s^2 for SI grids, as stored otherwise.
double system_inertia_report_units(const GridModel& grid);

std::string sweep_csv(const SweepResult& result);

// Runs fn(i) for i in [0, count) on up to `workers` threads; exceptions propagate.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn);

}  // namespace gridfreq

#include "gridfreq/detail/parallel.hpp"
