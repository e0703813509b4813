#include "gridfreq/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "gridfreq/error.hpp"
#include "gridfreq/random.hpp"

namespace gridfreq {

std::string_view to_string(Technology tech) {
  switch (tech) {
    case Technology::hydro: return "hydro";
    case Technology::nuclear: return "nuclear";
    case Technology::lignite: return "lignite";
    case Technology::hard_coal: return "hard_coal";
    case Technology::gas: return "gas";
    case Technology::other: return "other";
  }
  return "other";
}

Technology parse_technology(std::string_view name) {
  for (auto tech : {Technology::hydro, Technology::nuclear, Technology::lignite, Technology::hard_coal,
                    Technology::gas, Technology::other}) {
    if (name == to_string(tech)) return tech;
  }
  throw InputError("unknown technology '" + std::string(name) + "'");
}

TechnologyDefaults technology_defaults(Technology tech) {
  switch (tech) {
    case Technology::hydro: return {80.0, 4.0};
    case Technology::nuclear: return {16.0, 6.0};
    case Technology::lignite: return {16.0, 6.0};
    case Technology::hard_coal: return {35.0, 6.0};
    case Technology::gas: return {100.0, 6.0};
    case Technology::other: return {7.0, 3.0};
  }
  return {7.0, 3.0};
}

double GridModel::omega0() const { return 2.0 * std::numbers::pi * base_frequency; }

double GridModel::voltage_magnitude(const Bus& bus) const {
  return units == Units::si ? bus.voltage * 1e3 : bus.voltage;
}

double GridModel::total_inertia() const {
  double total = 0.0;
  for (const auto& bus : buses) total += bus.inertia;
  return total;
}

BusIndex::BusIndex(const GridModel& grid) {
  index_.reserve(grid.buses.size());
  for (std::size_t i = 0; i < grid.buses.size(); ++i) index_.emplace(grid.buses[i].id, i);
}

std::size_t BusIndex::at(BusId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InputError("unknown bus id " + std::to_string(id));
  return it->second;
}

bool ValidationReport::has(std::string_view rule) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

double total_load(const GridModel& grid) {
  double load = 0.0;
  for (const auto& bus : grid.buses) {
    if (bus.power < 0.0) load -= bus.power;
  }
  return load;
}

namespace {

std::pair<BusId, BusId> ordered(BusId a, BusId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

ValidationReport validate(const GridModel& grid) {
  ValidationReport report;
  auto add = [&](std::string rule, std::int64_t element, std::string message) {
    report.violations.push_back({std::move(rule), element, std::move(message)});
  };

  if (grid.empty()) {
    add("grid.empty", 0, "grid has no buses");
    return report;
  }

  std::map<BusId, int> seen;
  for (const auto& bus : grid.buses) {
    if (++seen[bus.id] == 2) add("bus.duplicate-id", bus.id, "bus id appears more than once");
    if (!(bus.damping > 0.0)) add("bus.damping", bus.id, "damping must be positive, got " + fmt(bus.damping));
    if (bus.kind == BusKind::generator && !(bus.inertia > 0.0))
      add("bus.inertia-generator", bus.id, "generator bus needs positive inertia, got " + fmt(bus.inertia));
    if (bus.kind == BusKind::load && bus.inertia != 0.0)
      add("bus.inertia-load", bus.id, "load bus must be inertialess, got " + fmt(bus.inertia));
  }

  std::map<std::pair<BusId, BusId>, int> pairs;
  for (std::size_t l = 0; l < grid.lines.size(); ++l) {
    const auto& line = grid.lines[l];
    const auto element = static_cast<std::int64_t>(l);
    if (!seen.count(line.from) || !seen.count(line.to)) {
      add("line.unknown-bus", element,
          "line " + std::to_string(line.from) + "-" + std::to_string(line.to) + " references an unknown bus");
      continue;
    }
    if (line.from == line.to) add("line.self-loop", element, "line connects bus " + std::to_string(line.from) + " to itself");
    if (!(line.susceptance > 0.0)) add("line.susceptance", element, "susceptance must be positive");
    if (++pairs[ordered(line.from, line.to)] == 2)
      add("line.parallel", element,
          "second line between buses " + std::to_string(line.from) + " and " + std::to_string(line.to));
  }

  if (!report.has("line.unknown-bus") && !report.has("bus.duplicate-id") && !is_connected(grid))
    add("grid.connected", 0, "grid has " + std::to_string(connected_components(grid).size()) + " components");

  double sum = 0.0, max_abs = 0.0;
  for (const auto& bus : grid.buses) {
    sum += bus.power;
    max_abs = std::max(max_abs, std::abs(bus.power));
  }
  const double load = total_load(grid);
  const double tolerance = 1e-6 * (load > 0.0 ? load : max_abs);
  if (std::abs(sum) > tolerance) add("grid.power-balance", 0, "power imbalance " + fmt(sum));

  std::stable_sort(report.violations.begin(), report.violations.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.rule, a.element) < std::tie(b.rule, b.element);
  });
  return report;
}

GridModel merge_parallel_lines(const GridModel& grid) {
  GridModel merged = grid;
  merged.lines.clear();
  std::map<std::pair<BusId, BusId>, std::size_t> slot;
  for (const auto& line : grid.lines) {
    auto key = ordered(line.from, line.to);
    auto [it, inserted] = slot.emplace(key, merged.lines.size());
    if (inserted) {
      merged.lines.push_back(line);
    } else {
      merged.lines[it->second].susceptance += line.susceptance;
    }
  }
  return merged;
}

std::vector<std::vector<std::size_t>> connected_components(const GridModel& grid) {
  const std::size_t n = grid.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  BusIndex index(grid);
  for (const auto& line : grid.lines) {
    if (!index.contains(line.from) || !index.contains(line.to)) continue;
    auto a = find(index.at(line.from));
    auto b = find(index.at(line.to));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> components;
  for (auto& [root, members] : groups) components.push_back(std::move(members));
  return components;
}

bool is_connected(const GridModel& grid) { return connected_components(grid).size() <= 1; }

GridModel largest_connected_component(const GridModel& grid) {
  if (grid.empty()) throw InputError("empty grid");
  auto components = connected_components(grid);
  if (components.size() == 1) return grid;

  auto min_id = [&](const std::vector<std::size_t>& c) {
    BusId m = grid.buses[c.front()].id;
    for (auto i : c) m = std::min(m, grid.buses[i].id);
    return m;
  };
  const auto* best = &components.front();
  for (const auto& c : components) {
    if (c.size() > best->size() || (c.size() == best->size() && min_id(c) < min_id(*best))) best = &c;
  }

  GridModel sub;
  sub.base_frequency = grid.base_frequency;
  sub.units = grid.units;
  sub.geographic = grid.geographic;
  std::unordered_map<BusId, bool> keep;
  for (auto i : *best) {
    sub.buses.push_back(grid.buses[i]);
    keep[grid.buses[i].id] = true;
  }
  for (const auto& line : grid.lines) {
    if (keep.count(line.from) && keep.count(line.to)) sub.lines.push_back(line);
  }
  for (const auto& gen : grid.generators) {
    if (keep.count(gen.bus)) sub.generators.push_back(gen);
  }
  return sub;
}

double line_susceptance(double length_km, double voltage_kv) {
  if (!(length_km > 0.0)) throw InputError("line length must be positive");
  double reactance = 0.0;
  if (voltage_kv == 220.0) {
    reactance = kReactance220;
  } else if (voltage_kv == 380.0) {
    reactance = kReactance380;
  } else {
    throw InputError("no default reactance for " + fmt(voltage_kv) + " kV");
  }
  return 1.0 / (reactance * length_km);
}

GridModel synth_two_cluster(const TwoClusterOptions& o) {
  if (o.first_size < 3 || o.second_size < 3) throw InputError("clusters need at least 3 buses");
  if (o.reach < 1) throw InputError("reach must be at least 1");
  if (o.bridge_path_buses < 0) throw InputError("bridge path length must be nonnegative");
  if (!(o.bridge_susceptance > 0.0) || !(o.bridge_susceptance < o.intra_susceptance))
    throw InputError("need 0 < bridge_susceptance < intra_susceptance");
  if (o.susceptance_jitter < 0.0 || o.susceptance_jitter >= 1.0) throw InputError("jitter must lie in [0, 1)");
  if (!(o.generator_power > 0.0) || !(o.generator_inertia > 0.0) || !(o.generator_damping > 0.0) ||
      !(o.load_damping > 0.0))
    throw InputError("generator power, inertia and damping must be positive");

  Rng rng(o.seed);
  GridModel grid;
  grid.base_frequency = o.base_frequency;
  grid.units = Units::per_unit;

  const int total = o.first_size + o.second_size + o.bridge_path_buses;
  grid.buses.resize(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) grid.buses[i].id = i;

  auto jittered = [&](double b) { return b * (1.0 + o.susceptance_jitter * (2.0 * uniform01(rng) - 1.0)); };

  // Ring layout: radius grows with cluster size so neighbouring buses sit ~1 unit apart.
  auto build_cluster = [&](int offset, int n, double cx) {
    const double radius = std::max(1.0, n / (2.0 * std::numbers::pi));
    for (int a = 0; a < n; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / n + std::numbers::pi;
      Position p{radius * std::sin(phi) + 0.05 * (uniform01(rng) - 0.5),
                 cx + radius * std::cos(phi) + 0.05 * (uniform01(rng) - 0.5)};
      grid.buses[offset + a].position = p;
    }
    const int reach = std::min(o.reach, n / 2);
    for (int a = 0; a < n; ++a) {
      for (int s = 1; s <= reach; ++s) {
        const int b = (a + s) % n;
        if (2 * s == n && a >= n / 2) continue;  // opposite pair already linked
        grid.lines.push_back({offset + a, offset + b, jittered(o.intra_susceptance), 1.0, 0.0});
      }
    }
    return radius;
  };
  const double r1 = build_cluster(0, o.first_size, 0.0);
  const double r2 = std::max(1.0, o.second_size / (2.0 * std::numbers::pi));
  const double gap = 2.0 + o.bridge_path_buses;
  build_cluster(o.first_size, o.second_size, r1 + gap + r2);

  // Bridge: first bus of cluster one (leftmost after rotation) to first bus of cluster two.
  BusId prev = 0;
  const double x0 = grid.buses[0].position->lon;
  const double x1 = grid.buses[o.first_size].position->lon;
  for (int k = 0; k < o.bridge_path_buses; ++k) {
    const BusId id = o.first_size + o.second_size + k;
    const double frac = (k + 1.0) / (o.bridge_path_buses + 1.0);
    grid.buses[id].position = Position{0.0, x0 + frac * (x1 - x0)};
    grid.lines.push_back({prev, id, o.bridge_susceptance, 1.0, 0.0});
    prev = id;
  }
  grid.lines.push_back({prev, o.first_size, o.bridge_susceptance, 1.0, 0.0});

  int n_gen = 0;
  for (auto& bus : grid.buses) {
    if (bus.id % 2 == 0) {
      bus.kind = BusKind::generator;
      bus.power = o.generator_power;
      bus.inertia = o.generator_inertia;
      bus.damping = o.generator_damping;
      ++n_gen;
    } else {
      bus.kind = BusKind::load;
      bus.damping = o.load_damping;
    }
  }
  const double share = -o.generator_power * n_gen / (total - n_gen);
  for (auto& bus : grid.buses) {
    if (bus.kind == BusKind::load) bus.power = share;
  }
  return merge_parallel_lines(grid);
}

GridModel synth_two_cluster(int n_per_cluster, double intra_susceptance, double bridge_susceptance,
                            std::uint64_t seed) {
  TwoClusterOptions options;
  options.first_size = n_per_cluster;
  options.second_size = n_per_cluster;
  options.intra_susceptance = intra_susceptance;
  options.bridge_susceptance = bridge_susceptance;
  options.seed = seed;
  return synth_two_cluster(options);
}

std::vector<BusId> cluster_bus_ids(const TwoClusterOptions& options, int cluster) {
  std::vector<BusId> ids;
  const int begin = cluster == 0 ? 0 : options.first_size;
  const int end = cluster == 0 ? options.first_size : options.first_size + options.second_size;
  for (int i = begin; i < end; ++i) ids.push_back(i);
  return ids;
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (target < acc) return i;
  }
  return last;
}

}  // namespace gridfreq
