#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridfreq {

using BusId = std::int64_t;

enum class BusKind { generator, load };

/// SI grids carry W, V and S; per-unit grids use V = 1 p.u. so Laplacian weights are susceptances.
enum class Units { si, per_unit };

/// Latitude/longitude in degrees for geographic grids, abstract (y, x) otherwise.
struct Position {
  double lat = 0.0;
  double lon = 0.0;
};

struct Bus {
  BusId id = 0;
  BusKind kind = BusKind::load;
  /// kV for SI grids, p.u. for per-unit grids.
  double voltage = 1.0;
  std::optional<Position> position;
  /// Pre-fault setpoint P_i^(0); positive for generation, negative for load.
  double power = 0.0;
  double inertia = 0.0;
  double damping = 0.0;
  std::string country;
};

/// Transmission line or transformer, lossless.
struct Line {
  BusId from = 0;
  BusId to = 0;
  double susceptance = 0.0;
  double length_km = 0.0;
  double voltage_kv = 0.0;
};

enum class Technology { hydro, nuclear, lignite, hard_coal, gas, other };

std::string_view to_string(Technology tech);
Technology parse_technology(std::string_view name);

/// Marginal cost ($/MWh) and inertia constant (s) per technology.
struct TechnologyDefaults {
  double marginal_cost;
  double inertia_constant;
};
TechnologyDefaults technology_defaults(Technology tech);

struct GeneratorRecord {
  BusId bus = 0;
  Technology technology = Technology::other;
  /// W for SI grids, p.u. otherwise.
  double rated_power = 0.0;
  double inertia_constant = 0.0;
  double marginal_cost = 0.0;
};

/// Value type; operations never mutate a grid in place, they return a new one.
struct GridModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<GeneratorRecord> generators;
  double base_frequency = 50.0;
  Units units = Units::per_unit;
  bool geographic = false;

  double omega0() const;
  std::size_t size() const { return buses.size(); }
  bool empty() const { return buses.empty(); }
  /// Voltage magnitude entering the power flow: volts for SI, p.u. otherwise.
  double voltage_magnitude(const Bus& bus) const;
  double total_inertia() const;
  /// Scale factor from MW to the grid's power unit.
  double megawatt() const { return units == Units::si ? 1e6 : 1.0; }
};

/// Bus id to position in GridModel::buses.
class BusIndex {
 public:
  explicit BusIndex(const GridModel& grid);
  std::size_t at(BusId id) const;
  bool contains(BusId id) const { return index_.count(id) != 0; }

 private:
  std::unordered_map<BusId, std::size_t> index_;
};

struct Violation {
  std::string rule;
  std::int64_t element = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(std::string_view rule) const;
};

/// Checks every GridModel invariant; violations are sorted by rule id, then element id.
ValidationReport validate(const GridModel& grid);

/// Sum of |P_i| over buses with negative setpoint.
double total_load(const GridModel& grid);

/// Merges parallel lines by summing susceptances; keeps the first record's length and voltage.
GridModel merge_parallel_lines(const GridModel& grid);

/// Connected components as lists of bus positions, each sorted ascending.
std::vector<std::vector<std::size_t>> connected_components(const GridModel& grid);

bool is_connected(const GridModel& grid);

/// Induced subgraph on the largest connected vertex set; ties go to the component holding the smallest bus id.
GridModel largest_connected_component(const GridModel& grid);

/// Kilometric reactance (Ohm/km) at 220 and 380 kV.
inline constexpr double kReactance220 = 0.360;
inline constexpr double kReactance380 = 0.265;

/// B = 1 / (X l) in siemens using the default kilometric reactance for the voltage level.
double line_susceptance(double length_km, double voltage_kv);

/// Two circulant clusters joined by a weak bridge (optionally through a path of intermediate buses).
struct TwoClusterOptions {
  int first_size = 10;
  int second_size = 10;
  /// Each bus links to its `reach` nearest ring neighbours on either side.
  int reach = 3;
  double intra_susceptance = 1.0;
  double bridge_susceptance = 0.05;
  int bridge_path_buses = 0;
  /// Relative uniform perturbation of each intra-cluster susceptance.
  double susceptance_jitter = 0.0;
  double generator_power = 0.2;
  double generator_inertia = 1.0;
  double generator_damping = 0.3;
  double load_damping = 0.3;
  double base_frequency = 50.0;
  std::uint64_t seed = 1;
};

/// Per-unit synthetic grid. Buses of the first cluster come first, then the second cluster,
/// then bridge path buses; generator and load roles alternate with the bus id.
GridModel synth_two_cluster(const TwoClusterOptions& options);
GridModel synth_two_cluster(int n_per_cluster, double intra_susceptance, double bridge_susceptance,
                            std::uint64_t seed);

/// Bus ids of the first and second cluster of a grid built by synth_two_cluster.
std::vector<BusId> cluster_bus_ids(const TwoClusterOptions& options, int cluster);

}  // namespace gridfreq
