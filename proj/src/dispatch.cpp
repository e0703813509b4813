#include "gridfreq/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "gridfreq/error.hpp"
#include "gridfreq/spectral.hpp"

namespace gridfreq {

BusId slack_bus(const GridModel& grid) {
  if (grid.empty()) throw InputError("empty grid");
  BusIndex index(grid);
  std::map<BusId, double> capacity;
  for (const auto& gen : grid.generators) {
    if (index.contains(gen.bus)) capacity[gen.bus] += gen.rated_power;
  }
  if (!capacity.empty()) {
    auto best = capacity.begin();
    for (auto it = capacity.begin(); it != capacity.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    return best->first;
  }
  const Bus* best = nullptr;
  for (const auto& bus : grid.buses) {
    if (bus.kind != BusKind::generator) continue;
    if (!best || bus.power > best->power || (bus.power == best->power && bus.id < best->id)) best = &bus;
  }
  if (best) return best->id;
  return std::min_element(grid.buses.begin(), grid.buses.end(), [](const Bus& a, const Bus& b) {
           return a.id < b.id;
         })->id;
}

Eigen::VectorXd dc_power_flow(const GridModel& grid, const Eigen::VectorXd& injections) {
  return dc_power_flow(grid, injections, slack_bus(grid));
}

Eigen::VectorXd dc_power_flow(const GridModel& grid, const Eigen::VectorXd& injections, BusId slack) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (injections.size() != n) throw InputError("injection vector size does not match the grid");
  if (!is_connected(grid)) throw InputError("DC power flow needs a connected grid");
  const double scale = 0.5 * injections.cwiseAbs().sum();
  if (std::abs(injections.sum()) > 1e-6 * scale) {
    std::ostringstream os;
    os << "unbalanced injections: sum " << injections.sum();
    throw InputError(os.str());
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  if (scale == 0.0 || n == 1) return theta;

  const auto s = static_cast<Eigen::Index>(BusIndex(grid).at(slack));
  const SparseMatrix laplacian = build_laplacian(grid);
  std::vector<Eigen::Triplet<double>> triplets;
  auto reduced_index = [s](Eigen::Index i) { return i < s ? i : i - 1; };
  for (Eigen::Index j = 0; j < laplacian.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(laplacian, j); it; ++it) {
      if (it.row() == s || it.col() == s) continue;
      triplets.emplace_back(reduced_index(it.row()), reduced_index(it.col()), it.value());
    }
  }
  SparseMatrix reduced(n - 1, n - 1);
  reduced.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd rhs(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != s) rhs(reduced_index(i)) = injections(i);
  }
  Eigen::SimplicialLDLT<SparseMatrix> solver(reduced);
  if (solver.info() != Eigen::Success) throw NumericalError("reduced Laplacian factorization failed");
  Eigen::VectorXd solution = solver.solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != s) theta(i) = solution(reduced_index(i));
  }
  return theta;
}

namespace {

struct Tableau {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<Eigen::Index> basis;

  void pivot(Eigen::Index row, Eigen::Index col) {
    const double p = a(row, col);
    a.row(row) /= p;
    b(row) /= p;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i == row) continue;
      const double f = a(i, col);
      if (f == 0.0) continue;
      a.row(i) -= f * a.row(row);
      b(i) -= f * b(row);
    }
    basis[row] = col;
  }

  // Bland's rule; columns at or beyond `allowed` never enter. Returns false if unbounded.
  bool optimize(const Eigen::VectorXd& cost, Eigen::Index allowed, double tol) {
    for (int iteration = 0; iteration < 100000; ++iteration) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed && entering < 0; ++j) {
        double reduced = cost(j);
        for (Eigen::Index r = 0; r < a.rows(); ++r) reduced -= cost(basis[r]) * a(r, j);
        if (reduced < -tol) entering = j;
      }
      if (entering < 0) return true;
      Eigen::Index leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (a(r, entering) <= tol) continue;
        const double ratio = b(r) / a(r, entering);
        if (leaving < 0 || ratio < best - tol || (std::abs(ratio - best) <= tol && basis[r] < basis[leaving])) {
          best = ratio;
          leaving = r;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
    throw NumericalError("simplex iteration limit reached");
  }
};

}  // namespace

Eigen::VectorXd solve_lp(const LinearProgram& lp) {
  const Eigen::Index n = lp.c.size();
  const Eigen::Index m_eq = lp.a_eq.rows();
  const Eigen::Index m_ub = lp.a_ub.rows();
  if ((m_eq > 0 && lp.a_eq.cols() != n) || (m_ub > 0 && lp.a_ub.cols() != n) || lp.b_eq.size() != m_eq ||
      lp.b_ub.size() != m_ub)
    throw InputError("inconsistent linear program dimensions");
  const Eigen::Index m = m_eq + m_ub;
  const Eigen::Index structural = n + m_ub;
  const Eigen::Index cols = structural + m;

  Tableau t;
  t.a = Eigen::MatrixXd::Zero(m, cols);
  t.b.resize(m);
  t.basis.resize(m);
  if (m_eq > 0) t.a.topLeftCorner(m_eq, n) = lp.a_eq;
  if (m_eq > 0) t.b.head(m_eq) = lp.b_eq;
  if (m_ub > 0) {
    t.a.block(m_eq, 0, m_ub, n) = lp.a_ub;
    t.a.block(m_eq, n, m_ub, m_ub).setIdentity();
    t.b.tail(m_ub) = lp.b_ub;
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    if (t.b(r) < 0) {
      t.a.row(r) *= -1.0;
      t.b(r) *= -1.0;
    }
    t.a(r, structural + r) = 1.0;
    t.basis[r] = structural + r;
  }

  const double scale = std::max({1.0, t.b.cwiseAbs().maxCoeff(), t.a.cwiseAbs().maxCoeff()});
  const double tol = 1e-11 * scale;

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
  phase1.tail(m).setOnes();
  t.optimize(phase1, cols, tol);
  double infeasibility = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    if (t.basis[r] >= structural) infeasibility += t.b(r);
  }
  if (infeasibility > 1e-9 * scale) throw InputError("linear program is infeasible");

  for (Eigen::Index r = 0; r < m; ++r) {
    if (t.basis[r] < structural) continue;
    for (Eigen::Index j = 0; j < structural; ++j) {
      if (std::abs(t.a(r, j)) > tol) {
        t.pivot(r, j);
        break;
      }
    }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols);
  phase2.head(n) = lp.c;
  if (!t.optimize(phase2, structural, tol)) throw NumericalError("linear program is unbounded");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (t.basis[r] < n) x(t.basis[r]) = std::max(0.0, t.b(r));
  }
  return x;
}

namespace {

std::vector<std::size_t> merit_order(const std::vector<GeneratorRecord>& generators) {
  std::vector<std::size_t> order(generators.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ga = generators[a];
    const auto& gb = generators[b];
    if (ga.marginal_cost != gb.marginal_cost) return ga.marginal_cost < gb.marginal_cost;
    return ga.bus < gb.bus;
  });
  return order;
}

std::vector<double> dispatch_with_limits(const DispatchProblem& problem, double demand) {
  const auto& grid = problem.grid;
  const auto& gens = problem.generators;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto g = static_cast<Eigen::Index>(gens.size());
  if (problem.line_limits.size() != grid.lines.size())
    throw InputError("line limit count does not match the line count");
  BusIndex index(grid);
  const BusId slack = slack_bus(grid);

  // Angles per unit injection at each bus, slack absorbing the balance.
  Eigen::MatrixXd sensitivity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
    unit(k) = 1.0;
    unit(static_cast<Eigen::Index>(index.at(slack))) -= 1.0;
    sensitivity.col(k) = dc_power_flow(grid, unit, slack);
  }

  std::vector<std::size_t> limited;
  for (std::size_t l = 0; l < problem.line_limits.size(); ++l) {
    if (std::isfinite(problem.line_limits[l])) limited.push_back(l);
  }
  const auto n_lim = static_cast<Eigen::Index>(limited.size());

  LinearProgram lp;
  const auto order = merit_order(gens);
  lp.c.resize(g);
  const double cost_scale = std::max(1.0, [&] {
    double c = 0.0;
    for (const auto& gen : gens) c = std::max(c, std::abs(gen.marginal_cost));
    return c;
  }());
  for (Eigen::Index rank = 0; rank < g; ++rank) {
    const auto k = static_cast<Eigen::Index>(order[rank]);
    lp.c(k) = gens[k].marginal_cost + 1e-9 * cost_scale * static_cast<double>(rank) / std::max<Eigen::Index>(g, 1);
  }
  lp.a_eq = Eigen::MatrixXd::Ones(1, g);
  lp.b_eq = Eigen::VectorXd::Constant(1, demand);

  lp.a_ub = Eigen::MatrixXd::Zero(g + 2 * n_lim, g);
  lp.b_ub.resize(g + 2 * n_lim);
  for (Eigen::Index k = 0; k < g; ++k) {
    lp.a_ub(k, k) = 1.0;
    lp.b_ub(k) = gens[k].rated_power;
  }
  for (Eigen::Index r = 0; r < n_lim; ++r) {
    const auto& line = grid.lines[limited[r]];
    const auto i = static_cast<Eigen::Index>(index.at(line.from));
    const auto j = static_cast<Eigen::Index>(index.at(line.to));
    const double w = line.susceptance * grid.voltage_magnitude(grid.buses[i]) * grid.voltage_magnitude(grid.buses[j]);
    Eigen::RowVectorXd ptdf = w * (sensitivity.row(i) - sensitivity.row(j));
    const double load_flow = ptdf.dot(problem.loads);
    for (Eigen::Index k = 0; k < g; ++k) {
      const auto bus = static_cast<Eigen::Index>(index.at(gens[k].bus));
      lp.a_ub(g + 2 * r, k) = ptdf(bus);
      lp.a_ub(g + 2 * r + 1, k) = -ptdf(bus);
    }
    const double limit = problem.line_limits[limited[r]];
    lp.b_ub(g + 2 * r) = limit + load_flow;
    lp.b_ub(g + 2 * r + 1) = limit - load_flow;
  }
  const Eigen::VectorXd x = solve_lp(lp);
  return {x.data(), x.data() + x.size()};
}

}  // namespace

DispatchResult economic_dispatch(const DispatchProblem& problem) {
  const auto& grid = problem.grid;
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (problem.loads.size() != n) throw InputError("load vector size does not match the grid");
  if ((problem.loads.array() < 0.0).any()) throw InputError("loads must be nonnegative");
  BusIndex index(grid);
  for (const auto& gen : problem.generators) {
    if (!index.contains(gen.bus)) throw InputError("generator on unknown bus " + std::to_string(gen.bus));
    if (gen.rated_power < 0.0) throw InputError("negative capacity at bus " + std::to_string(gen.bus));
  }

  const double demand = problem.loads.sum();
  double capacity = 0.0;
  for (const auto& gen : problem.generators) capacity += gen.rated_power;
  if (capacity < demand * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "infeasible dispatch: capacity " << capacity << " below load " << demand;
    throw InputError(os.str());
  }

  DispatchResult result;
  result.slack = slack_bus(grid);
  if (problem.line_limits.empty()) {
    result.output.assign(problem.generators.size(), 0.0);
    double remaining = demand;
    for (auto k : merit_order(problem.generators)) {
      if (remaining <= 0.0) break;
      const double p = std::min(problem.generators[k].rated_power, remaining);
      result.output[k] = p;
      remaining -= p;
    }
  } else {
    result.output = dispatch_with_limits(problem, demand);
  }

  result.injections = -problem.loads;
  for (std::size_t k = 0; k < problem.generators.size(); ++k) {
    result.injections(static_cast<Eigen::Index>(index.at(problem.generators[k].bus))) += result.output[k];
    result.objective += problem.generators[k].marginal_cost * result.output[k] / grid.megawatt();
  }
  result.angles = dc_power_flow(grid, result.injections, result.slack);
  return result;
}

}  // namespace gridfreq
