#include "gridfreq/assembly.hpp"

#include <algorithm>

#include "gridfreq/error.hpp"

namespace gridfreq {

GridModel assemble_operating_point(const GridModel& raw, const Eigen::VectorXd& loads, const AssemblyConfig& config,
                                   AssemblyReport* report) {
  const auto n = static_cast<Eigen::Index>(raw.size());
  if (loads.size() != n) throw InputError("load vector size does not match the grid");

  DispatchProblem problem{raw, loads, raw.generators, config.line_limits};
  DispatchResult dispatch = economic_dispatch(problem);

  GridModel grid = raw;
  BusIndex index(grid);
  const double omega0 = grid.omega0();
  std::vector<std::string> warnings;

  Eigen::VectorXd inertia = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd damping = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < raw.generators.size(); ++k) {
    if (dispatch.output[k] <= 0.0) continue;
    const auto& record = raw.generators[k];
    const auto i = static_cast<Eigen::Index>(index.at(record.bus));
    const double m = derive_inertia(record, omega0);
    inertia(i) += m;
    damping(i) += derive_generator_damping(record, m, config.damping);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (loads(i) > 0.0) damping(i) += derive_load_damping(loads(i), config.damping.load_alpha, omega0);
  }

  std::vector<double> positive;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (damping(i) > 0.0) positive.push_back(damping(i));
  }
  if (positive.empty()) throw InputError("no bus has positive damping");
  std::nth_element(positive.begin(), positive.begin() + static_cast<long>(positive.size() / 2), positive.end());
  const double floor = config.damping_floor_fraction * positive[positive.size() / 2];
  int floored = 0, demoted = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    auto& bus = grid.buses[i];
    bus.power = dispatch.injections(i);
    bus.inertia = inertia(i);
    bus.damping = damping(i);
    if (bus.kind == BusKind::generator && bus.inertia == 0.0) {
      bus.kind = BusKind::load;
      ++demoted;
    }
    if (bus.kind == BusKind::load) bus.inertia = 0.0;
    if (!(bus.damping > 0.0)) {
      bus.damping = floor;
      ++floored;
    }
  }

  const auto slack = static_cast<Eigen::Index>(index.at(dispatch.slack));
  double imbalance = 0.0;
  for (const auto& bus : grid.buses) imbalance += bus.power;
  grid.buses[slack].power -= imbalance;

  if (demoted > 0) warnings.push_back(std::to_string(demoted) + " generator buses have no online unit and act as loads");
  if (floored > 0) warnings.push_back(std::to_string(floored) + " buses without load or generation got the damping floor");
  if (report) {
    report->dispatch = std::move(dispatch);
    report->warnings = std::move(warnings);
  }
  return grid;
}

}  // namespace gridfreq
