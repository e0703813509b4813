#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/grid_model.hpp"

namespace gridfreq {

struct TownRecord {
  std::string country;
  Position position;
  std::int64_t population = 0;
};

struct LoadDistributionConfig {
  double d_max_km = 50.0;
  double weight_220 = 1.0;
  double weight_380 = 3.0;
  // Towns with no bus in range are dropped with a warning unless this is set.
  bool strict = false;
};

struct DampingConfig {
  double load_alpha = 1.5;
  // d = ratio * m, in 1/s, used when per_technology is empty.
  double ratio = 0.5;
  // d = ratio_t * m for each technology; once non-empty, every technology used must be listed.
  std::map<Technology, double> per_technology;
};

struct IngestOptions {
  // Reactance used for lines joining buses of different voltage when no susceptance is given.
  double transformer_reactance_ohm = 40.0;
  double base_frequency = 50.0;
};

// Raw network: buses with kind, voltage, position and country; lines with susceptances;
// generator records. Setpoints, inertia and damping are left at zero.
GridModel load_grid_files(const std::filesystem::path& bus_file, const std::filesystem::path& line_file,
                          const std::filesystem::path& generator_file, const IngestOptions& options = {});

std::vector<TownRecord> load_towns(const std::filesystem::path& file);
// Country to load in MW.
std::map<std::string, double> load_national_loads(const std::filesystem::path& file);

// Great-circle distance in km.
double haversine_km(const Position& a, const Position& b);
double bus_distance_km(const GridModel& grid, const Position& a, const Position& b);

// Splits national_load over the load buses whose country_of entry is `country` (every load bus if
// `country` is empty), by population within d_max weighted by voltage level.
Eigen::VectorXd distribute_national_load(const GridModel& grid, const std::vector<TownRecord>& towns,
                                         double national_load, const LoadDistributionConfig& config,
                                         const std::map<BusId, std::string>& country_of,
                                         const std::string& country = {});

// All countries at once; loads in the grid's power unit.
Eigen::VectorXd distribute_national_loads(const GridModel& grid, const std::vector<TownRecord>& towns,
                                          const std::map<std::string, double>& national_loads,
                                          const LoadDistributionConfig& config);

// m = 2 H P_rated / omega0.
double derive_inertia(const GeneratorRecord& record, double omega0);
// d = alpha P / omega0.
double derive_load_damping(double load, double alpha, double omega0);
double derive_generator_damping(const GeneratorRecord& record, double inertia, const DampingConfig& config);

}  // namespace gridfreq
