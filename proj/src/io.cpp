#include "gridfreq/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridfreq/csv.hpp"
#include "gridfreq/error.hpp"

namespace gridfreq {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw InputError(path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_grid(const GridModel& grid, const std::filesystem::path& directory) {
  std::ostringstream buses;
  buses << "id,kind,voltage,lat,lon,power,inertia,damping,country\n";
  for (const auto& bus : grid.buses) {
    buses << bus.id << ',' << (bus.kind == BusKind::generator ? "generator" : "load") << ','
          << format_double(bus.voltage) << ',';
    if (bus.position) buses << format_double(bus.position->lat) << ',' << format_double(bus.position->lon);
    else buses << ',';
    buses << ',' << format_double(bus.power) << ',' << format_double(bus.inertia) << ','
          << format_double(bus.damping) << ',' << bus.country << '\n';
  }
  std::ostringstream lines;
  lines << "from,to,susceptance,length_km,voltage_kv\n";
  for (const auto& line : grid.lines) {
    lines << line.from << ',' << line.to << ',' << format_double(line.susceptance) << ','
          << format_double(line.length_km) << ',' << format_double(line.voltage_kv) << '\n';
  }
  std::ostringstream gens;
  gens << "bus_id,technology,rated_power,H_s,cost_per_MWh\n";
  for (const auto& gen : grid.generators) {
    gens << gen.bus << ',' << to_string(gen.technology) << ',' << format_double(gen.rated_power) << ','
         << format_double(gen.inertia_constant) << ',' << format_double(gen.marginal_cost) << '\n';
  }
  nlohmann::ordered_json meta;
  meta["units"] = grid.units == Units::si ? "si" : "per_unit";
  meta["base_frequency_hz"] = grid.base_frequency;
  meta["geographic"] = grid.geographic;

  std::filesystem::create_directories(directory);
  write_text(directory / "buses.csv", buses.str());
  write_text(directory / "lines.csv", lines.str());
  write_text(directory / "generators.csv", gens.str());
  write_text(directory / "meta.json", meta.dump(2) + "\n");
}

GridModel read_grid(const std::filesystem::path& directory) {
  GridModel grid;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(directory / "meta.json"));
    const auto units = meta.at("units").get<std::string>();
    if (units != "si" && units != "per_unit") throw InputError("unknown units '" + units + "'");
    grid.units = units == "si" ? Units::si : Units::per_unit;
    grid.base_frequency = meta.at("base_frequency_hz").get<double>();
    grid.geographic = meta.at("geographic").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError((directory / "meta.json").string() + ": " + e.what());
  }

  const auto buses = CsvTable::read(directory / "buses.csv");
  buses.require_columns({"id", "kind", "voltage", "lat", "lon", "power", "inertia", "damping"});
  for (std::size_t r = 0; r < buses.rows(); ++r) {
    Bus bus;
    bus.id = buses.integer(r, "id");
    const auto& kind = buses.text(r, "kind");
    if (kind == "generator") bus.kind = BusKind::generator;
    else if (kind == "load") bus.kind = BusKind::load;
    else buses.fail(r, "kind", "unknown bus kind '" + kind + "'");
    bus.voltage = buses.number(r, "voltage");
    auto lat = buses.optional_number(r, "lat");
    auto lon = buses.optional_number(r, "lon");
    if (lat && lon) bus.position = Position{*lat, *lon};
    bus.power = buses.number(r, "power");
    bus.inertia = buses.number(r, "inertia");
    bus.damping = buses.number(r, "damping");
    bus.country = buses.optional_text(r, "country").value_or("");
    grid.buses.push_back(bus);
  }
  const auto lines = CsvTable::read(directory / "lines.csv");
  lines.require_columns({"from", "to", "susceptance", "length_km", "voltage_kv"});
  for (std::size_t r = 0; r < lines.rows(); ++r) {
    grid.lines.push_back({lines.integer(r, "from"), lines.integer(r, "to"), lines.number(r, "susceptance"),
                          lines.number(r, "length_km"), lines.number(r, "voltage_kv")});
  }
  const auto gens = CsvTable::read(directory / "generators.csv");
  gens.require_columns({"bus_id", "technology", "rated_power", "H_s", "cost_per_MWh"});
  for (std::size_t r = 0; r < gens.rows(); ++r) {
    GeneratorRecord gen;
    gen.bus = gens.integer(r, "bus_id");
    try {
      gen.technology = parse_technology(gens.text(r, "technology"));
    } catch (const InputError& e) {
      gens.fail(r, "technology", e.what());
    }
    gen.rated_power = gens.number(r, "rated_power");
    gen.inertia_constant = gens.number(r, "H_s");
    gen.marginal_cost = gens.number(r, "cost_per_MWh");
    grid.generators.push_back(gen);
  }
  return grid;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  os << "t,bus_id,theta_rad,omega_rad_s\n";
  for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t i = 0; i < trajectory.bus_ids.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      os << format_double(trajectory.times[s]) << ',' << trajectory.bus_ids[i] << ','
         << format_double(trajectory.theta(row, col)) << ',' << format_double(trajectory.omega(row, col)) << '\n';
    }
  }
  return os.str();
}

std::string rocof_csv(const Eigen::MatrixXd& rocof, const std::vector<BusId>& bus_ids, double magnitude) {
  std::ostringstream os;
  os << "k,bus_id,rocof_hz_s\n";
  for (Eigen::Index k = 0; k < rocof.rows(); ++k) {
    for (Eigen::Index i = 0; i < rocof.cols(); ++i) {
      os << k << ',' << bus_ids[static_cast<std::size_t>(i)] << ',' << format_double(rocof(k, i)) << '\n';
    }
  }
  os << "M_b,all," << format_double(magnitude) << '\n';
  return os.str();
}

std::string frame_geojson(const GridModel& grid, const Frame& frame) {
  nlohmann::ordered_json collection;
  collection["type"] = "FeatureCollection";
  collection["properties"] = {{"k", frame.k}, {"t_begin_s", frame.t_begin}, {"t_end_s", frame.t_end}};
  auto features = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& bus = grid.buses[i];
    if (!bus.position) throw InputError("bus " + std::to_string(bus.id) + " has no position for GeoJSON output");
    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", "Point"}, {"coordinates", {bus.position->lon, bus.position->lat}}};
    feature["properties"] = {{"bus_id", bus.id},
                             {"kind", bus.kind == BusKind::generator ? "generator" : "load"},
                             {"rocof_hz_s", frame.rocof(static_cast<Eigen::Index>(i))}};
    features.push_back(std::move(feature));
  }
  collection["features"] = std::move(features);
  return collection.dump() + "\n";
}

std::string modes_csv(const Modes& modes, const std::vector<BusId>& bus_ids) {
  std::ostringstream os;
  os << "bus_id";
  for (Eigen::Index a = 1; a < modes.count(); ++a) os << ",u" << a + 1;
  os << "\neigenvalue";
  for (Eigen::Index a = 1; a < modes.count(); ++a) os << ',' << format_double(modes.eigenvalues(a));
  os << '\n';
  for (Eigen::Index i = 0; i < modes.size(); ++i) {
    os << bus_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 1; a < modes.count(); ++a) os << ',' << format_double(modes.eigenvectors(i, a));
    os << '\n';
  }
  return os.str();
}

std::string dispatch_csv(const GridModel& grid, const DispatchResult& result) {
  std::ostringstream os;
  os << "bus_id,P_MW,theta_rad\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    os << grid.buses[i].id << ',' << format_double(result.injections(k) / grid.megawatt()) << ','
       << format_double(result.angles(k)) << '\n';
  }
  return os.str();
}

}  // namespace gridfreq
