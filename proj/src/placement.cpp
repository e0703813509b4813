#include "gridfreq/placement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridfreq/csv.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/spectral.hpp"

namespace gridfreq {

std::string_view to_string(Procedure procedure) {
  switch (procedure) {
    case Procedure::uniform: return "uniform";
    case Procedure::fiedler: return "fiedler";
    case Procedure::non_fiedler: return "non_fiedler";
    case Procedure::custom: return "custom";
  }
  return "custom";
}

Procedure parse_procedure(std::string_view name) {
  for (auto p : {Procedure::uniform, Procedure::fiedler, Procedure::non_fiedler, Procedure::custom}) {
    if (name == to_string(p)) return p;
  }
  if (name == "U") return Procedure::uniform;
  if (name == "F") return Procedure::fiedler;
  if (name == "nF") return Procedure::non_fiedler;
  throw InputError("unknown placement procedure '" + std::string(name) + "'");
}

Eigen::VectorXd sampling_weights(const Eigen::VectorXd& u2_squared, const PlacementProcedure& procedure) {
  const Eigen::Index n = u2_squared.size();
  if (n == 0) throw InputError("no generator buses to place inertia on");
  Eigen::VectorXd w(n);
  switch (procedure.kind) {
    case Procedure::uniform:
      w.setOnes();
      break;
    case Procedure::fiedler:
    case Procedure::non_fiedler:
      if (!(u2_squared.maxCoeff() > 0.0)) throw InputError("Fiedler mode vanishes on every generator bus");
      if ((u2_squared.array() < 0.0).any()) throw InputError("squared components must be nonnegative");
      if (procedure.kind == Procedure::fiedler) {
        w = u2_squared;
      } else {
        if (!(procedure.epsilon_floor > 0.0)) throw InputError("epsilon floor must be positive");
        w = u2_squared.cwiseMax(procedure.epsilon_floor).cwiseInverse();
      }
      break;
    case Procedure::custom:
      if (procedure.custom_weights.size() != n) throw InputError("custom weight count does not match");
      w = procedure.custom_weights;
      if ((w.array() < 0.0).any() || !(w.sum() > 0.0)) throw InputError("custom weights must be nonnegative, not all zero");
      break;
  }
  return w / w.sum();
}

Eigen::VectorXd sampling_weights(const GridModel& grid, const Eigen::VectorXd& fiedler_weight,
                                 const PlacementProcedure& procedure) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (fiedler_weight.size() != n) throw InputError("Fiedler weight size does not match the grid");
  std::vector<Eigen::Index> generators;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (grid.buses[i].kind == BusKind::generator) generators.push_back(i);
  }
  const auto g = static_cast<Eigen::Index>(generators.size());
  Eigen::VectorXd sub(g);
  PlacementProcedure local = procedure;
  if (procedure.kind == Procedure::custom) {
    if (procedure.custom_weights.size() != n) throw InputError("custom weight count does not match the grid");
    local.custom_weights.resize(g);
  }
  for (Eigen::Index k = 0; k < g; ++k) {
    sub(k) = fiedler_weight(generators[k]);
    if (procedure.kind == Procedure::custom) local.custom_weights(k) = procedure.custom_weights(generators[k]);
  }
  const Eigen::VectorXd p = sampling_weights(sub, local);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < g; ++k) full(generators[k]) = p(k);
  return full;
}

Eigen::VectorXd bus_inertia(const GridModel& grid) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) m(static_cast<Eigen::Index>(i)) = grid.buses[i].inertia;
  return m;
}

namespace {

void check_weights(const GridModel& grid, const Eigen::VectorXd& weights, const Eigen::VectorXd& reference) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (weights.size() != n || reference.size() != n) throw InputError("weight or reference size does not match the grid");
  if ((weights.array() < 0.0).any()) throw InputError("sampling weights must be nonnegative");
}

std::vector<double> masked(const GridModel& grid, const Eigen::VectorXd& weights, const Eigen::VectorXd& inertia,
                           bool need_inertia) {
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.buses[i].kind != BusKind::generator) continue;
    if (need_inertia && !(inertia(static_cast<Eigen::Index>(i)) > 0.0)) continue;
    w[i] = weights(static_cast<Eigen::Index>(i));
  }
  return w;
}

double base_unit(const GridModel& grid, const Eigen::VectorXd& reference, double fraction) {
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.buses[i].kind == BusKind::generator && reference(static_cast<Eigen::Index>(i)) > 0.0) {
      total += reference(static_cast<Eigen::Index>(i));
      ++count;
    }
  }
  if (count == 0) throw InputError("no generator with reference inertia");
  return fraction * total / count;
}

}  // namespace

GridModel modify_inertia(const GridModel& grid, const Eigen::VectorXd& weights, double target_m_sys,
                         Direction direction, Rng& rng, const Eigen::VectorXd& reference_inertia,
                         const InertiaStep& step) {
  check_weights(grid, weights, reference_inertia);
  GridModel result = grid;
  Eigen::VectorXd m = bus_inertia(grid);
  double total = m.sum();
  if (std::abs(target_m_sys - total) <= 1e-12 * std::max(std::abs(total), std::abs(target_m_sys))) return result;

  if (direction == Direction::remove) {
    if (!(target_m_sys < total) || target_m_sys < 0.0)
      throw InputError("removal needs 0 <= target < current system inertia");
    auto w = masked(grid, weights, m, true);
    while (total > target_m_sys) {
      const std::size_t i = sample_index(w, rng);
      if (i == w.size()) throw InputError("no eligible generator left to remove inertia from");
      const double excess = total - target_m_sys;
      const auto k = static_cast<Eigen::Index>(i);
      if (m(k) <= excess + 1e-12 * m(k)) {
        total -= m(k);
        m(k) = 0.0;
        w[i] = 0.0;
      } else {
        m(k) -= excess;
        total = target_m_sys;
      }
    }
  } else {
    if (!(target_m_sys > total)) throw InputError("addition needs target > current system inertia");
    auto w = masked(grid, weights, reference_inertia, true);
    const double unit = base_unit(grid, reference_inertia, step.base_unit_fraction);
    while (total < target_m_sys) {
      const std::size_t i = sample_index(w, rng);
      if (i == w.size()) throw InputError("no eligible generator to add inertia to");
      const auto k = static_cast<Eigen::Index>(i);
      const double increment = std::max(step.increment_fraction * reference_inertia(k), unit);
      const double remaining = target_m_sys - total;
      if (increment >= remaining) {
        m(k) += remaining;
        total = target_m_sys;
      } else {
        m(k) += increment;
        total += increment;
      }
    }
  }
  for (std::size_t i = 0; i < result.size(); ++i) result.buses[i].inertia = m(static_cast<Eigen::Index>(i));
  return result;
}

GridModel transfer_inertia(const GridModel& grid, const Eigen::VectorXd& from_weights,
                           const Eigen::VectorXd& to_weights, double amount, Rng& rng,
                           const Eigen::VectorXd& reference_inertia, const InertiaStep& step) {
  check_weights(grid, from_weights, reference_inertia);
  check_weights(grid, to_weights, reference_inertia);
  if (amount < 0.0) throw InputError("transfer amount must be nonnegative");
  Eigen::VectorXd m = bus_inertia(grid);
  if (amount > m.sum()) throw InputError("transfer amount exceeds system inertia");
  const double unit = base_unit(grid, reference_inertia, step.increment_fraction);
  auto from = masked(grid, from_weights, m, true);
  const auto to = masked(grid, to_weights, reference_inertia, true);

  double remaining = amount;
  while (remaining > 0.0) {
    const std::size_t i = sample_index(from, rng);
    if (i == from.size()) throw InputError("no eligible generator left to take inertia from");
    const auto ki = static_cast<Eigen::Index>(i);
    double q = std::min({unit, m(ki), remaining});
    if (m(ki) - q <= 1e-9 * unit) q = m(ki);
    m(ki) -= q;
    if (m(ki) <= 0.0) {
      m(ki) = 0.0;
      from[i] = 0.0;
    }
    const std::size_t j = sample_index(to, rng);
    if (j == to.size()) throw InputError("no eligible generator to give inertia to");
    m(static_cast<Eigen::Index>(j)) += q;
    remaining -= q;
    from[j] = from_weights(static_cast<Eigen::Index>(j));
  }
  GridModel result = grid;
  for (std::size_t i = 0; i < result.size(); ++i) result.buses[i].inertia = m(static_cast<Eigen::Index>(i));
  return result;
}

double system_inertia_report_units(const GridModel& grid) {
  return grid.units == Units::si ? grid.total_inertia() / 1e9 : grid.total_inertia();
}

SweepResult sweep_inertia(const GridModel& grid, const PlacementProcedure& procedure, const std::vector<double>& levels,
                          const std::vector<FaultScenario>& faults, std::uint64_t seed, const SweepOptions& options) {
  if (levels.empty()) throw InputError("no inertia levels given");
  if (faults.empty()) throw InputError("no faults given");
  const double start = grid.total_inertia();
  const bool descending = std::all_of(levels.begin(), levels.end(), [&](double l) { return l <= start; });
  const bool ascending = std::all_of(levels.begin(), levels.end(), [&](double l) { return l >= start; });
  if (!descending && !ascending) throw InputError("levels must lie on one side of the current system inertia");
  std::vector<double> path = levels;
  if (descending) std::sort(path.begin(), path.end(), std::greater<>());
  else std::sort(path.begin(), path.end());

  const Eigen::VectorXd u2 = fiedler_weight(grid);
  const Eigen::VectorXd weights = sampling_weights(grid, u2, procedure);
  const Eigen::VectorXd reference = bus_inertia(grid);
  const Eigen::VectorXd theta0 = steady_state(grid);
  BusIndex index(grid);

  Rng rng(seed);
  std::vector<GridModel> level_grids;
  GridModel current = grid;
  for (double level : path) {
    const Direction direction = level < current.total_inertia() ? Direction::remove : Direction::add;
    current = modify_inertia(current, weights, level, direction, rng, reference, options.step);
    level_grids.push_back(current);
  }

  const std::size_t n_faults = faults.size();
  SweepResult result;
  result.points.resize(level_grids.size() * n_faults);
  parallel_for(result.points.size(), options.workers, [&](std::size_t task) {
    const auto& level_grid = level_grids[task / n_faults];
    const auto& fault = faults[task % n_faults];
    SweepPoint point;
    point.procedure = std::string(to_string(procedure.kind));
    point.seed = seed;
    point.m_sys = system_inertia_report_units(level_grid);
    point.fault_bus = fault.bus;
    point.u2b_squared = u2(static_cast<Eigen::Index>(index.at(fault.bus)));
    try {
      point.magnitude = run_fault(level_grid, theta0, fault, options.simulation).magnitude;
    } catch (const InputError& e) {
      std::ostringstream os;
      os << "level " << point.m_sys << ", fault at bus " << fault.bus << ": " << e.what();
      throw InputError(os.str());
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "level " << point.m_sys << ", fault at bus " << fault.bus << ": " << e.what();
      throw NumericalError(os.str());
    }
    result.points[task] = std::move(point);
  });
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "procedure,seed,M_sys_GWs2,fault_bus,u2b_sq,M_b\n";
  for (const auto& p : result.points) {
    os << p.procedure << ',' << p.seed << ',' << format_double(p.m_sys) << ',' << p.fault_bus << ','
       << format_double(p.u2b_squared) << ',' << format_double(p.magnitude) << '\n';
  }
  return os.str();
}

}  // namespace gridfreq
