#include "gridfreq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/SparseLU>

#include "gridfreq/dispatch.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/ode.hpp"
#include "gridfreq/spectral.hpp"

namespace gridfreq {

void FaultScenario::check() const {
  if (!(delta_p >= 0.0)) throw InputError("delta_p must be nonnegative");
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (n_sim < 1) throw InputError("n_sim must be at least 1");
  if (std::abs(n_sim * dt - t_sim) > 1e-9 * std::max(1.0, t_sim)) {
    std::ostringstream os;
    os << "n_sim * dt = " << n_sim * dt << " does not match t_sim = " << t_sim;
    throw InputError(os.str());
  }
  if (h < 0.0 || h > dt / 50.0 * (1.0 + 1e-12)) throw InputError("integration step h must lie in (0, dt/50]");
}

double FaultScenario::max_step() const { return h > 0.0 ? h : dt / 50.0; }

namespace {

struct Edge {
  Eigen::Index i;
  Eigen::Index j;
  double w;
};

// Flattened network for the right-hand side.
struct Network {
  std::vector<Edge> edges;
  Eigen::VectorXd power;
  Eigen::VectorXd inertia;
  Eigen::VectorXd damping;
  // State slot of each bus's frequency, or -1 for inertialess buses.
  std::vector<Eigen::Index> slot;
  std::vector<Eigen::Index> inertial;

  explicit Network(const GridModel& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    BusIndex index(grid);
    for (const auto& line : grid.lines) {
      const auto i = static_cast<Eigen::Index>(index.at(line.from));
      const auto j = static_cast<Eigen::Index>(index.at(line.to));
      if (i == j) continue;
      edges.push_back(
          {i, j, line.susceptance * grid.voltage_magnitude(grid.buses[i]) * grid.voltage_magnitude(grid.buses[j])});
    }
    power.resize(n);
    inertia.resize(n);
    damping.resize(n);
    slot.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& bus = grid.buses[i];
      power(i) = bus.power;
      inertia(i) = bus.inertia;
      damping(i) = bus.damping;
      if (bus.inertia < 0.0) throw InputError("negative inertia at bus " + std::to_string(bus.id));
      if (bus.inertia > 0.0) {
        slot[i] = static_cast<Eigen::Index>(inertial.size());
        inertial.push_back(i);
      } else if (!(bus.damping > 0.0)) {
        throw InputError("inertialess bus " + std::to_string(bus.id) + " needs positive damping");
      }
    }
  }

  Eigen::Index size() const { return power.size(); }

  void electrical_power(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd& pe) const {
    pe.setZero(size());
    for (const auto& e : edges) {
      const double f = e.w * std::sin(theta(e.i) - theta(e.j));
      pe(e.i) += f;
      pe(e.j) -= f;
    }
  }

  void linear_power(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::VectorXd& pe) const {
    pe.setZero(size());
    for (const auto& e : edges) {
      const double f = e.w * (theta(e.i) - theta(e.j));
      pe(e.i) += f;
      pe(e.j) -= f;
    }
  }
};

}  // namespace

Eigen::VectorXd power_flow_residual(const GridModel& grid, const Eigen::VectorXd& theta) {
  Network net(grid);
  if (theta.size() != net.size()) throw InputError("angle vector size does not match the grid");
  Eigen::VectorXd pe;
  net.electrical_power(theta, pe);
  return net.power - pe;
}

Eigen::VectorXd steady_state(const GridModel& grid) {
  Network net(grid);
  const Eigen::Index n = net.size();
  const double p_max = net.power.cwiseAbs().maxCoeff();
  if (p_max == 0.0) return Eigen::VectorXd::Zero(n);
  const auto s = static_cast<Eigen::Index>(BusIndex(grid).at(slack_bus(grid)));
  const double tolerance = 1e-8 * p_max;

  Eigen::VectorXd theta = dc_power_flow(grid, net.power, grid.buses[s].id);
  Eigen::VectorXd pe;
  auto reduced_norm = [&](const Eigen::VectorXd& th) {
    net.electrical_power(th, pe);
    Eigen::VectorXd res = net.power - pe;
    res(s) = 0.0;
    return res;
  };
  auto reduced_index = [s](Eigen::Index i) { return i < s ? i : i - 1; };

  Eigen::VectorXd residual = reduced_norm(theta);
  for (int iteration = 0; iteration < 50; ++iteration) {
    const double norm = residual.cwiseAbs().maxCoeff();
    if (norm < tolerance) return theta;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * net.edges.size());
    for (const auto& e : net.edges) {
      const double c = e.w * std::cos(theta(e.i) - theta(e.j));
      const bool si = e.i == s, sj = e.j == s;
      if (!si) triplets.emplace_back(reduced_index(e.i), reduced_index(e.i), c);
      if (!sj) triplets.emplace_back(reduced_index(e.j), reduced_index(e.j), c);
      if (!si && !sj) {
        triplets.emplace_back(reduced_index(e.i), reduced_index(e.j), -c);
        triplets.emplace_back(reduced_index(e.j), reduced_index(e.i), -c);
      }
    }
    SparseMatrix jacobian(n - 1, n - 1);
    jacobian.setFromTriplets(triplets.begin(), triplets.end());
    jacobian.makeCompressed();
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(jacobian);
    if (lu.info() != Eigen::Success) break;
    Eigen::VectorXd rhs(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != s) rhs(reduced_index(i)) = residual(i);
    }
    const Eigen::VectorXd step = lu.solve(rhs);
    if (!step.allFinite()) break;

    double alpha = 1.0;
    Eigen::VectorXd candidate(n);
    Eigen::VectorXd candidate_residual;
    for (int halving = 0; halving < 30; ++halving) {
      for (Eigen::Index i = 0; i < n; ++i) candidate(i) = i == s ? theta(i) : theta(i) + alpha * step(reduced_index(i));
      candidate_residual = reduced_norm(candidate);
      if (candidate_residual.cwiseAbs().maxCoeff() < norm) break;
      alpha *= 0.5;
    }
    theta = candidate;
    residual = candidate_residual;
  }
  std::ostringstream os;
  os << "no stationary state found: residual " << residual.cwiseAbs().maxCoeff() << " after Newton iterations";
  throw NumericalError(os.str());
}

GridModel apply_fault(const GridModel& grid, const FaultScenario& scenario) {
  if (!(scenario.delta_p >= 0.0)) throw InputError("delta_p must be nonnegative");
  BusIndex index(grid);
  GridModel faulted = grid;
  auto& bus = faulted.buses[index.at(scenario.bus)];
  if (bus.kind != BusKind::generator)
    throw InputError("fault bus " + std::to_string(bus.id) + " is not a generator");
  if (bus.power < scenario.delta_p * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "fault bus " << bus.id << " produces " << bus.power << ", less than delta_p = " << scenario.delta_p;
    throw InputError(os.str());
  }
  bus.kind = BusKind::load;
  bus.power -= scenario.delta_p;
  bus.inertia = 0.0;
  return faulted;
}

GridModel apply_power_step(const GridModel& grid, BusId bus, double delta_p) {
  GridModel stepped = grid;
  stepped.buses[BusIndex(grid).at(bus)].power += delta_p;
  return stepped;
}

Trajectory simulate_at(const GridModel& faulted, const Eigen::VectorXd& theta0, const std::vector<double>& times,
                       double max_step, const SimulationOptions& options) {
  Network net(faulted);
  const Eigen::Index n = net.size();
  if (theta0.size() != n) throw InputError("initial angle vector size does not match the grid");
  if (times.empty() || times.front() != 0.0) throw InputError("sample times must start at 0");
  if (!std::is_sorted(times.begin(), times.end())) throw InputError("sample times must be sorted");
  const auto g = static_cast<Eigen::Index>(net.inertial.size());
  const bool linear = options.model == DynamicsModel::linearized;

  Eigen::VectorXd pe0;
  net.electrical_power(theta0, pe0);
  Eigen::VectorXd pe(n), residual(n), delta(n);
  auto mismatch = [&](const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (linear) {
      delta = theta - theta0;
      net.linear_power(delta, pe);
      pe += pe0;
    } else {
      net.electrical_power(theta, pe);
    }
    residual = net.power - pe;
  };

  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) {
    mismatch(y.head(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index k = net.slot[i];
      if (k >= 0) {
        const double omega = y(n + k);
        dydt(i) = omega;
        dydt(n + k) = (residual(i) - net.damping(i) * omega) / net.inertia(i);
      } else {
        dydt(i) = residual(i) / net.damping(i);
      }
    }
  };

  Trajectory trajectory;
  trajectory.times = times;
  for (const auto& bus : faulted.buses) trajectory.bus_ids.push_back(bus.id);
  const auto samples = static_cast<Eigen::Index>(times.size());
  trajectory.theta.resize(samples, n);
  trajectory.omega.resize(samples, n);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n + g);
  y.head(n) = theta0;
  OdeOptions<double> ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;
  ode.h_max = max_step;

  Eigen::Index sample = 0;
  auto observe = [&](double t, const Eigen::VectorXd& state) {
    trajectory.theta.row(sample) = state.head(n).transpose();
    if (t == 0.0) {
      trajectory.omega.row(sample).setZero();
    } else {
      mismatch(state.head(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = net.slot[i];
        trajectory.omega(sample, i) = k >= 0 ? state(n + k) : residual(i) / net.damping(i);
      }
    }
    ++sample;
  };
  integrate_dopri5<double>(rhs, y, 0.0, std::span<const double>(times), ode, observe);
  return trajectory;
}

namespace {

std::vector<double> sample_times(const FaultScenario& scenario, const SimulationOptions& options) {
  std::set<double> times;
  for (int k = 0; k <= scenario.n_sim; ++k) times.insert(k * scenario.dt);
  if (options.output_step > 0.0) {
    const auto count = static_cast<long>(std::floor(scenario.t_sim / options.output_step + 1e-9));
    for (long k = 0; k <= count; ++k) {
      const double t = k * options.output_step;
      // Skip points that would duplicate a kdt sample up to rounding.
      const double nearest = std::round(t / scenario.dt) * scenario.dt;
      if (std::abs(t - nearest) > 1e-9 * scenario.dt) times.insert(t);
    }
  }
  return {times.begin(), times.end()};
}

}  // namespace

Trajectory simulate(const GridModel& faulted, const Eigen::VectorXd& theta0, const FaultScenario& scenario,
                    const SimulationOptions& options) {
  scenario.check();
  return simulate_at(faulted, theta0, sample_times(scenario, options), scenario.max_step(), options);
}

Trajectory simulate_multi_fault(const GridModel& grid, const Eigen::VectorXd& theta0,
                                const std::vector<FaultScenario>& faults, const SimulationOptions& options) {
  if (faults.empty()) throw InputError("no faults given");
  std::set<BusId> buses;
  GridModel faulted = grid;
  double max_step = faults.front().max_step();
  for (const auto& fault : faults) {
    fault.check();
    if (std::abs(fault.dt - faults.front().dt) > 0.0 || fault.n_sim != faults.front().n_sim)
      throw InputError("faults must share the time grid");
    if (!buses.insert(fault.bus).second)
      throw InputError("bus " + std::to_string(fault.bus) + " is faulted more than once");
    faulted = apply_fault(faulted, fault);
    max_step = std::min(max_step, fault.max_step());
  }
  return simulate_at(faulted, theta0, sample_times(faults.front(), options), max_step, options);
}

Eigen::MatrixXd rocof_series(const Trajectory& trajectory, double dt, int n_sim) {
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (n_sim < 1) throw InputError("n_sim must be at least 1");
  std::vector<Eigen::Index> rows;
  for (int k = 0; k <= n_sim; ++k) {
    const double target = k * dt;
    auto it = std::lower_bound(trajectory.times.begin(), trajectory.times.end(), target - 1e-9 * dt);
    if (it == trajectory.times.end() || std::abs(*it - target) > 1e-9 * dt) {
      std::ostringstream os;
      os << "insufficient horizon: no sample at t = " << target;
      throw InputError(os.str());
    }
    rows.push_back(it - trajectory.times.begin());
  }
  const double scale = 1.0 / (2.0 * std::numbers::pi * dt);
  Eigen::MatrixXd rocof(n_sim, trajectory.omega.cols());
  for (int k = 0; k < n_sim; ++k) rocof.row(k) = scale * (trajectory.omega.row(rows[k + 1]) - trajectory.omega.row(rows[k]));
  return rocof;
}

Eigen::MatrixXd rocof_series(const Trajectory& trajectory, double dt) {
  if (trajectory.times.empty()) throw InputError("empty trajectory");
  const int n_sim = static_cast<int>(std::floor(trajectory.times.back() / dt + 1e-9));
  if (n_sim < 1) throw InputError("insufficient horizon: trajectory shorter than dt");
  return rocof_series(trajectory, dt, n_sim);
}

double disturbance_magnitude(const Eigen::MatrixXd& rocof) { return rocof.cwiseAbs().sum(); }

double disturbance_magnitude(const Eigen::MatrixXd& rocof, const std::vector<bool>& mask) {
  if (mask.size() != static_cast<std::size_t>(rocof.cols())) throw InputError("mask size does not match");
  double total = 0.0;
  for (Eigen::Index i = 0; i < rocof.cols(); ++i) {
    if (mask[i]) total += rocof.col(i).cwiseAbs().sum();
  }
  return total;
}

std::vector<Frame> snapshot_frames(const Trajectory& trajectory, double dt, int n_sim) {
  const auto rocof = rocof_series(trajectory, dt, n_sim);
  std::vector<Frame> frames;
  for (int k = 0; k < n_sim; ++k) frames.push_back({k, k * dt, (k + 1) * dt, rocof.row(k).transpose()});
  return frames;
}

std::vector<bool> generator_mask(const GridModel& grid) {
  std::vector<bool> mask;
  for (const auto& bus : grid.buses) mask.push_back(bus.kind == BusKind::generator);
  return mask;
}

FaultRun run_fault(const GridModel& grid, const Eigen::VectorXd& theta0, const FaultScenario& scenario,
                   const SimulationOptions& options) {
  return run_faults(grid, theta0, {scenario}, options);
}

FaultRun run_faults(const GridModel& grid, const Eigen::VectorXd& theta0, const std::vector<FaultScenario>& faults,
                    const SimulationOptions& options) {
  FaultRun run;
  run.trajectory = simulate_multi_fault(grid, theta0, faults, options);
  run.rocof = rocof_series(run.trajectory, faults.front().dt, faults.front().n_sim);
  run.magnitude = disturbance_magnitude(run.rocof);
  run.magnitude_generators = disturbance_magnitude(run.rocof, generator_mask(grid));
  return run;
}

}  // namespace gridfreq
