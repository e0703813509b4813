#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/grid_model.hpp"
#include "gridfreq/random.hpp"

namespace fixtures {

using namespace gridfreq;

// Asymmetric barbell: a 12-bus lobe that carries most of the Fiedler mode and a 24-bus core.
inline TwoClusterOptions barbell_options() {
  TwoClusterOptions o;
  o.first_size = 12;
  o.second_size = 24;
  o.reach = 3;
  o.intra_susceptance = 100.0;
  o.bridge_susceptance = 3.0;
  o.generator_power = 0.2;
  o.generator_inertia = 1.0;
  o.generator_damping = 0.3;
  o.load_damping = 0.3;
  o.seed = 1;
  return o;
}

inline constexpr double kBarbellDeltaP = 0.1;

inline GridModel barbell() { return synth_two_cluster(barbell_options()); }

inline std::vector<BusId> generators_in(const GridModel& grid, const std::vector<BusId>& ids) {
  std::vector<BusId> out;
  for (auto id : ids) {
    if (grid.buses[BusIndex(grid).at(id)].kind == BusKind::generator) out.push_back(id);
  }
  return out;
}

inline std::vector<BusId> generator_ids(const GridModel& grid) {
  std::vector<BusId> out;
  for (const auto& bus : grid.buses) {
    if (bus.kind == BusKind::generator) out.push_back(bus.id);
  }
  return out;
}

// Every bus a generator with the same m and d; setpoints kept.
inline GridModel homogeneous(GridModel grid, double m, double d) {
  for (auto& bus : grid.buses) {
    bus.kind = BusKind::generator;
    bus.inertia = m;
    bus.damping = d;
  }
  return grid;
}

// Connected random grid: a random spanning tree plus extra chords, per-unit weights in [0.5, 2].
inline GridModel random_grid(int n, int extra_lines, Rng& rng) {
  GridModel grid;
  for (int i = 0; i < n; ++i) {
    Bus bus;
    bus.id = i;
    bus.position = Position{uniform01(rng), uniform01(rng)};
    grid.buses.push_back(bus);
  }
  auto weight = [&] { return 0.5 + 1.5 * uniform01(rng); };
  for (int i = 1; i < n; ++i) {
    const auto parent = static_cast<BusId>(uniform01(rng) * i);
    grid.lines.push_back({parent, i, weight(), 1.0, 0.0});
  }
  for (int e = 0; e < extra_lines; ++e) {
    const auto a = static_cast<BusId>(uniform01(rng) * n);
    const auto b = static_cast<BusId>(uniform01(rng) * n);
    if (a != b) grid.lines.push_back({a, b, weight(), 1.0, 0.0});
  }
  grid = merge_parallel_lines(grid);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto& bus = grid.buses[i];
    const bool gen = i % 2 == 0;
    bus.kind = gen ? BusKind::generator : BusKind::load;
    bus.power = gen ? 0.1 + 0.2 * uniform01(rng) : 0.0;
    bus.inertia = gen ? 0.5 + uniform01(rng) : 0.0;
    bus.damping = 0.2 + 0.3 * uniform01(rng);
    total += bus.power;
  }
  const int loads = n / 2;
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 1) grid.buses[i].power = -total / loads;
  }
  return grid;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = average;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace fixtures
