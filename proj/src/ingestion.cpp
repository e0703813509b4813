#include "gridfreq/ingestion.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "gridfreq/csv.hpp"
#include "gridfreq/error.hpp"

namespace gridfreq {

namespace {

BusKind parse_kind(const CsvTable& table, std::size_t row) {
  const auto& kind = table.text(row, "kind");
  if (kind == "generator" || kind == "gen") return BusKind::generator;
  if (kind == "load") return BusKind::load;
  table.fail(row, "kind", "unknown bus kind '" + kind + "'");
}

}  // namespace

GridModel load_grid_files(const std::filesystem::path& bus_file, const std::filesystem::path& line_file,
                          const std::filesystem::path& generator_file, const IngestOptions& options) {
  GridModel grid;
  grid.units = Units::si;
  grid.geographic = true;
  grid.base_frequency = options.base_frequency;

  const auto buses = CsvTable::read(bus_file);
  buses.require_columns({"id", "kind", "voltage_kv", "lat", "lon"});
  std::set<BusId> ids;
  for (std::size_t r = 0; r < buses.rows(); ++r) {
    Bus bus;
    bus.id = buses.integer(r, "id");
    if (!ids.insert(bus.id).second) buses.fail(r, "id", "duplicate bus id " + std::to_string(bus.id));
    bus.kind = parse_kind(buses, r);
    bus.voltage = buses.number(r, "voltage_kv");
    if (!(bus.voltage > 0.0)) buses.fail(r, "voltage_kv", "voltage must be positive");
    bus.position = Position{buses.number(r, "lat"), buses.number(r, "lon")};
    bus.country = buses.optional_text(r, "country").value_or("");
    grid.buses.push_back(bus);
  }

  BusIndex index(grid);
  const auto lines = CsvTable::read(line_file);
  lines.require_columns({"from", "to", "length_km", "voltage_kv"});
  for (std::size_t r = 0; r < lines.rows(); ++r) {
    Line line;
    line.from = lines.integer(r, "from");
    line.to = lines.integer(r, "to");
    if (!index.contains(line.from)) lines.fail(r, "from", "unknown bus " + std::to_string(line.from));
    if (!index.contains(line.to)) lines.fail(r, "to", "unknown bus " + std::to_string(line.to));
    if (line.from == line.to) lines.fail(r, "to", "self-loop at bus " + std::to_string(line.from));
    line.length_km = lines.number(r, "length_km");
    if (!(line.length_km > 0.0)) lines.fail(r, "length_km", "length must be positive");
    line.voltage_kv = lines.number(r, "voltage_kv");
    if (auto b = lines.optional_number(r, "susceptance_S")) {
      if (!(*b > 0.0)) lines.fail(r, "susceptance_S", "susceptance must be positive");
      line.susceptance = *b;
    } else {
      const double v_from = grid.buses[index.at(line.from)].voltage;
      const double v_to = grid.buses[index.at(line.to)].voltage;
      if (v_from != v_to) {
        line.susceptance = 1.0 / options.transformer_reactance_ohm;
      } else {
        try {
          line.susceptance = line_susceptance(line.length_km, line.voltage_kv);
        } catch (const InputError& e) {
          lines.fail(r, "voltage_kv", e.what());
        }
      }
    }
    grid.lines.push_back(line);
  }

  const auto gens = CsvTable::read(generator_file);
  gens.require_columns({"bus_id", "technology", "rated_power_MW"});
  for (std::size_t r = 0; r < gens.rows(); ++r) {
    GeneratorRecord record;
    record.bus = gens.integer(r, "bus_id");
    if (!index.contains(record.bus)) gens.fail(r, "bus_id", "unknown bus " + std::to_string(record.bus));
    if (grid.buses[index.at(record.bus)].kind != BusKind::generator)
      gens.fail(r, "bus_id", "bus " + std::to_string(record.bus) + " is not a generator bus");
    try {
      record.technology = parse_technology(gens.text(r, "technology"));
    } catch (const InputError& e) {
      gens.fail(r, "technology", e.what());
    }
    const double rated = gens.number(r, "rated_power_MW");
    if (!(rated > 0.0)) gens.fail(r, "rated_power_MW", "rated power must be positive");
    record.rated_power = rated * 1e6;
    const auto defaults = technology_defaults(record.technology);
    record.inertia_constant = gens.optional_number(r, "H_s").value_or(defaults.inertia_constant);
    record.marginal_cost = gens.optional_number(r, "cost_per_MWh").value_or(defaults.marginal_cost);
    if (record.inertia_constant < 0.0) gens.fail(r, "H_s", "inertia constant must be nonnegative");
    grid.generators.push_back(record);
  }

  return largest_connected_component(merge_parallel_lines(grid));
}

std::vector<TownRecord> load_towns(const std::filesystem::path& file) {
  const auto table = CsvTable::read(file);
  table.require_columns({"country", "lat", "lon", "population"});
  std::vector<TownRecord> towns;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    TownRecord town;
    town.country = table.text(r, "country");
    town.position = {table.number(r, "lat"), table.number(r, "lon")};
    town.population = table.integer(r, "population");
    if (town.population <= 0) table.fail(r, "population", "population must be positive");
    towns.push_back(town);
  }
  return towns;
}

std::map<std::string, double> load_national_loads(const std::filesystem::path& file) {
  const auto table = CsvTable::read(file);
  table.require_columns({"country", "load_MW"});
  std::map<std::string, double> loads;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const double load = table.number(r, "load_MW");
    if (load < 0.0) table.fail(r, "load_MW", "load must be nonnegative");
    if (!loads.emplace(table.text(r, "country"), load).second) table.fail(r, "country", "duplicate country");
  }
  return loads;
}

double haversine_km(const Position& a, const Position& b) {
  constexpr double earth_radius_km = 6371.0088;
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * to_rad;
  const double dlon = (b.lon - a.lon) * to_rad;
  const double h = std::pow(std::sin(0.5 * dlat), 2) +
                   std::cos(a.lat * to_rad) * std::cos(b.lat * to_rad) * std::pow(std::sin(0.5 * dlon), 2);
  return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

double bus_distance_km(const GridModel& grid, const Position& a, const Position& b) {
  if (grid.geographic) return haversine_km(a, b);
  return std::hypot(a.lat - b.lat, a.lon - b.lon);
}

Eigen::VectorXd distribute_national_load(const GridModel& grid, const std::vector<TownRecord>& towns,
                                         double national_load, const LoadDistributionConfig& config,
                                         const std::map<BusId, std::string>& country_of, const std::string& country) {
  if (!(config.d_max_km > 0.0)) throw InputError("d_max must be positive");
  if (!(config.weight_220 > 0.0) || !(config.weight_380 > 0.0)) throw InputError("bus weights must be positive");
  if (national_load < 0.0) throw InputError("national load must be nonnegative");

  const auto n = static_cast<Eigen::Index>(grid.size());
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& bus = grid.buses[i];
    if (bus.kind != BusKind::load) continue;
    if (!country.empty()) {
      auto it = country_of.find(bus.id);
      if (it == country_of.end() || it->second != country) continue;
    }
    if (!bus.position) throw InputError("load bus " + std::to_string(bus.id) + " has no position");
    candidates.push_back(i);
  }
  auto weight = [&](const Bus& bus) { return bus.voltage >= 300.0 ? config.weight_380 : config.weight_220; };

  Eigen::VectorXd effective = Eigen::VectorXd::Zero(n);
  for (const auto& town : towns) {
    if (!country.empty() && town.country != country) continue;
    double total_weight = 0.0;
    std::vector<std::pair<Eigen::Index, double>> in_range;
    for (auto i : candidates) {
      const auto& bus = grid.buses[i];
      if (bus_distance_km(grid, town.position, *bus.position) < config.d_max_km) {
        in_range.emplace_back(i, weight(bus));
        total_weight += weight(bus);
      }
    }
    if (in_range.empty()) {
      std::ostringstream os;
      os << "town at (" << town.position.lat << ", " << town.position.lon << ") has no bus within "
         << config.d_max_km << " km";
      if (config.strict) throw InputError(os.str());
      std::cerr << "warning: " << os.str() << "; dropped\n";
      continue;
    }
    for (auto [i, w] : in_range) effective(i) += static_cast<double>(town.population) * w / total_weight;
  }

  const double total = effective.sum();
  if (national_load > 0.0 && !(total > 0.0)) {
    throw InputError("no load bus" + (country.empty() ? std::string() : " in " + country) +
                     " has a town within d_max");
  }
  if (national_load == 0.0) return Eigen::VectorXd::Zero(n);
  return national_load * effective / total;
}

Eigen::VectorXd distribute_national_loads(const GridModel& grid, const std::vector<TownRecord>& towns,
                                          const std::map<std::string, double>& national_loads,
                                          const LoadDistributionConfig& config) {
  std::map<BusId, std::string> country_of;
  for (const auto& bus : grid.buses) country_of[bus.id] = bus.country;
  Eigen::VectorXd loads = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& [country, load_mw] : national_loads) {
    loads += distribute_national_load(grid, towns, load_mw * grid.megawatt(), config, country_of, country);
  }
  return loads;
}

double derive_inertia(const GeneratorRecord& record, double omega0) {
  if (!(omega0 > 0.0)) throw InputError("omega0 must be positive");
  if (record.rated_power < 0.0 || record.inertia_constant < 0.0)
    throw InputError("rated power and inertia constant must be nonnegative");
  return 2.0 * record.inertia_constant * record.rated_power / omega0;
}

double derive_load_damping(double load, double alpha, double omega0) {
  if (!(alpha > 0.0 && alpha < 5.0)) throw InputError("load alpha must lie in (0, 5)");
  if (!(omega0 > 0.0)) throw InputError("omega0 must be positive");
  if (!(load > 0.0)) throw InputError("load must be positive to define a damping coefficient");
  return alpha * load / omega0;
}

double derive_generator_damping(const GeneratorRecord& record, double inertia, const DampingConfig& config) {
  if (config.per_technology.empty()) {
    if (!(config.ratio >= 0.0)) throw InputError("damping ratio must be nonnegative");
    return config.ratio * inertia;
  }
  auto it = config.per_technology.find(record.technology);
  if (it == config.per_technology.end())
    throw InputError("no damping entry for technology '" + std::string(to_string(record.technology)) + "'");
  return it->second * inertia;
}

}  // namespace gridfreq
