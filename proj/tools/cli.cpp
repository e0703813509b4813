#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridfreq/assembly.hpp"
#include "gridfreq/csv.hpp"
#include "gridfreq/dynamics.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/ingestion.hpp"
#include "gridfreq/io.hpp"
#include "gridfreq/placement.hpp"
#include "gridfreq/spectral.hpp"

namespace gridfreq::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::vector<std::pair<std::string, std::string>> kDefaults{
    {"grid.source", "synthetic"},
    {"grid.artifact", ""},
    {"grid.buses", ""},
    {"grid.lines", ""},
    {"grid.generators", ""},
    {"grid.towns", ""},
    {"grid.national_loads", ""},
    {"grid.base_frequency", "50"},
    {"grid.transformer_reactance_ohm", "40"},
    {"grid.d_max_km", "50"},
    {"grid.weight_220", "1"},
    {"grid.weight_380", "3"},
    {"grid.strict_towns", "false"},
    {"grid.load_alpha", "1.5"},
    {"grid.damping_ratio", "0.5"},
    {"grid.damping_table", ""},
    {"grid.damping_floor_fraction", "0.01"},
    {"synthetic.first_size", "12"},
    {"synthetic.second_size", "24"},
    {"synthetic.reach", "3"},
    {"synthetic.intra_susceptance", "100"},
    {"synthetic.bridge_susceptance", "3"},
    {"synthetic.bridge_path_buses", "0"},
    {"synthetic.jitter", "0"},
    {"synthetic.generator_power", "0.2"},
    {"synthetic.generator_inertia", "1"},
    {"synthetic.generator_damping", "0.3"},
    {"synthetic.load_damping", "0.3"},
    {"synthetic.seed", "1"},
    {"fault.buses", ""},
    {"fault.delta_p", "0.1"},
    {"fault.t_sim", "5"},
    {"fault.dt", "0.5"},
    {"fault.n_sim", "10"},
    {"fault.h", "0"},
    {"fault.model", "nonlinear"},
    {"fault.output_step", "0"},
    {"fault.rtol", "1e-10"},
    {"fault.atol", "1e-12"},
    {"fault.frames", "true"},
    {"spectral.k", "6"},
    {"spectral.dt", "0.5"},
    {"spectral.m", "0"},
    {"spectral.d", "0"},
    {"sweep.procedures", "uniform,fiedler,non_fiedler"},
    {"sweep.levels", "0.6"},
    {"sweep.faults", ""},
    {"sweep.seed", "1"},
    {"sweep.seeds", "1"},
    {"sweep.workers", "1"},
    {"sweep.epsilon_floor", "1e-9"},
    {"sweep.increment_fraction", "0.1"},
    {"sweep.base_unit_fraction", "0.01"},
    {"output.dir", "out"},
};

class Config {
 public:
  Config() {
    for (const auto& [key, value] : kDefaults) tree_.put(key, value);
  }

  void merge_file(const fs::path& path) {
    pt::ptree file;
    try {
      pt::read_ini(path.string(), file);
    } catch (const pt::ini_parser_error& e) {
      throw InputError(std::string("config: ") + e.what());
    }
    for (const auto& [section, entries] : file) {
      if (entries.empty()) throw InputError("config: key '" + section + "' outside a section");
      for (const auto& [key, value] : entries) set(section + "." + key, value.data());
    }
  }

  void set(const std::string& key, const std::string& value) {
    if (!tree_.get_optional<std::string>(key)) throw InputError("config: unknown key '" + key + "'");
    tree_.put(key, value);
  }

  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InputError("override '" + assignment + "' must look like section.key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }

  std::string text(const std::string& key) const { return tree_.get<std::string>(key); }

  double number(const std::string& key) const {
    const auto value = text(key);
    try {
      std::size_t used = 0;
      const double parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return parsed;
    } catch (const std::logic_error&) {
      throw InputError("config: " + key + " = '" + value + "' is not a number");
    }
  }

  long integer(const std::string& key) const {
    const auto value = text(key);
    try {
      std::size_t used = 0;
      const long parsed = std::stol(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return parsed;
    } catch (const std::logic_error&) {
      throw InputError("config: " + key + " = '" + value + "' is not an integer");
    }
  }

  bool flag(const std::string& key) const {
    const auto value = text(key);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InputError("config: " + key + " = '" + value + "' is not a boolean");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> items;
    for (auto& item : split_csv_line(text(key))) {
      if (!item.empty()) items.push_back(item);
    }
    return items;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> values;
    for (const auto& item : list(key)) {
      try {
        values.push_back(std::stod(item));
      } catch (const std::logic_error&) {
        throw InputError("config: " + key + " entry '" + item + "' is not a number");
      }
    }
    return values;
  }

  void write(const fs::path& path) const {
    std::ostringstream os;
    pt::write_ini(os, tree_);
    write_text(path, os.str());
  }

 private:
  pt::ptree tree_;
};

DampingConfig damping_config(const Config& c) {
  DampingConfig damping;
  damping.load_alpha = c.number("grid.load_alpha");
  damping.ratio = c.number("grid.damping_ratio");
  for (const auto& entry : c.list("grid.damping_table")) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos) throw InputError("config: damping_table entry '" + entry + "' needs tech:ratio");
    damping.per_technology[parse_technology(entry.substr(0, colon))] = std::stod(entry.substr(colon + 1));
  }
  return damping;
}

struct LoadedGrid {
  GridModel grid;
  std::optional<AssemblyReport> assembly;
};

LoadedGrid load_grid(const Config& c) {
  const auto source = c.text("grid.source");
  LoadedGrid loaded;
  if (source == "synthetic") {
    TwoClusterOptions o;
    o.first_size = static_cast<int>(c.integer("synthetic.first_size"));
    o.second_size = static_cast<int>(c.integer("synthetic.second_size"));
    o.reach = static_cast<int>(c.integer("synthetic.reach"));
    o.intra_susceptance = c.number("synthetic.intra_susceptance");
    o.bridge_susceptance = c.number("synthetic.bridge_susceptance");
    o.bridge_path_buses = static_cast<int>(c.integer("synthetic.bridge_path_buses"));
    o.susceptance_jitter = c.number("synthetic.jitter");
    o.generator_power = c.number("synthetic.generator_power");
    o.generator_inertia = c.number("synthetic.generator_inertia");
    o.generator_damping = c.number("synthetic.generator_damping");
    o.load_damping = c.number("synthetic.load_damping");
    o.base_frequency = c.number("grid.base_frequency");
    o.seed = static_cast<std::uint64_t>(c.integer("synthetic.seed"));
    loaded.grid = synth_two_cluster(o);
  } else if (source == "artifact") {
    if (c.text("grid.artifact").empty()) throw InputError("config: grid.artifact is required for source = artifact");
    loaded.grid = read_grid(c.text("grid.artifact"));
  } else if (source == "files") {
    for (const auto* key : {"grid.buses", "grid.lines", "grid.generators", "grid.towns", "grid.national_loads"}) {
      if (c.text(key).empty()) throw InputError(std::string("config: ") + key + " is required for source = files");
    }
    IngestOptions ingest;
    ingest.base_frequency = c.number("grid.base_frequency");
    ingest.transformer_reactance_ohm = c.number("grid.transformer_reactance_ohm");
    const GridModel raw = load_grid_files(c.text("grid.buses"), c.text("grid.lines"), c.text("grid.generators"), ingest);
    LoadDistributionConfig distribution;
    distribution.d_max_km = c.number("grid.d_max_km");
    distribution.weight_220 = c.number("grid.weight_220");
    distribution.weight_380 = c.number("grid.weight_380");
    distribution.strict = c.flag("grid.strict_towns");
    const auto loads = distribute_national_loads(raw, load_towns(c.text("grid.towns")),
                                                 load_national_loads(c.text("grid.national_loads")), distribution);
    AssemblyConfig assembly;
    assembly.damping = damping_config(c);
    assembly.damping_floor_fraction = c.number("grid.damping_floor_fraction");
    loaded.assembly.emplace();
    loaded.grid = assemble_operating_point(raw, loads, assembly, &*loaded.assembly);
  } else {
    throw InputError("config: grid.source must be synthetic, files or artifact, got '" + source + "'");
  }
  return loaded;
}

fs::path prepare_output(const Config& c) {
  const fs::path dir = c.text("output.dir");
  fs::create_directories(dir);
  c.write(dir / "config.ini");
  return dir;
}

FaultScenario base_scenario(const Config& c, const GridModel& grid) {
  FaultScenario s;
  s.delta_p = c.number("fault.delta_p") * grid.megawatt();
  s.t_sim = c.number("fault.t_sim");
  s.dt = c.number("fault.dt");
  s.n_sim = static_cast<int>(c.integer("fault.n_sim"));
  s.h = c.number("fault.h");
  s.check();
  return s;
}

SimulationOptions simulation_options(const Config& c) {
  SimulationOptions o;
  const auto model = c.text("fault.model");
  if (model == "nonlinear") o.model = DynamicsModel::nonlinear;
  else if (model == "linearized") o.model = DynamicsModel::linearized;
  else throw InputError("config: fault.model must be nonlinear or linearized");
  o.rtol = c.number("fault.rtol");
  o.atol = c.number("fault.atol");
  o.output_step = c.number("fault.output_step");
  return o;
}

std::vector<BusId> bus_list(const Config& c, const std::string& key) {
  std::vector<BusId> ids;
  for (const auto& item : c.list(key)) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InputError("config: " + key + " entry '" + item + "' is not a bus id");
    }
  }
  return ids;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream os;
  os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int cmd_build(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  auto loaded = load_grid(c);
  const GridModel& grid = loaded.grid;
  write_grid(grid, dir);
  if (loaded.assembly) {
    write_text(dir / "dispatch.csv", dispatch_csv(grid, loaded.assembly->dispatch));
    for (const auto& w : loaded.assembly->warnings) out << "warning: " << w << '\n';
  }

  nlohmann::ordered_json manifest;
  manifest["created_utc"] = timestamp();
  manifest["buses"] = grid.size();
  manifest["lines"] = grid.lines.size();
  manifest["generators"] = grid.generators.size();
  manifest["units"] = grid.units == Units::si ? "si" : "per_unit";
  manifest["system_inertia"] = grid.total_inertia();
  manifest["slack_bus"] = slack_bus(grid);
  nlohmann::ordered_json files;
  for (const auto& name : kGridFiles) files[name] = sha256_file((dir / name).string());
  manifest["sha256"] = files;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  const auto report = validate(grid);
  out << "grid: " << grid.size() << " buses, " << grid.lines.size() << " lines, " << grid.generators.size()
      << " generator records\n";
  if (report.ok()) {
    out << "validation: ok\n";
    return 0;
  }
  out << "validation: " << report.violations.size() << " violations\n";
  for (const auto& v : report.violations) out << "  " << v.rule << " [" << v.element << "] " << v.message << '\n';
  return 2;
}

int cmd_fault(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  const GridModel grid = load_grid(c).grid;
  const auto buses = bus_list(c, "fault.buses");
  if (buses.empty()) throw InputError("config: fault.buses must list at least one bus");
  const FaultScenario base = base_scenario(c, grid);
  std::vector<FaultScenario> faults;
  for (auto bus : buses) {
    FaultScenario s = base;
    s.bus = bus;
    faults.push_back(s);
  }
  const auto options = simulation_options(c);
  const Eigen::VectorXd theta0 = steady_state(grid);
  const FaultRun run = run_faults(grid, theta0, faults, options);

  write_text(dir / "trajectory.csv", trajectory_csv(run.trajectory));
  write_text(dir / "rocof.csv", rocof_csv(run.rocof, run.trajectory.bus_ids, run.magnitude));
  const bool positioned = std::all_of(grid.buses.begin(), grid.buses.end(), [](const Bus& b) { return b.position.has_value(); });
  int frames = 0;
  if (c.flag("fault.frames") && positioned) {
    for (const auto& frame : snapshot_frames(run.trajectory, base.dt, base.n_sim)) {
      std::ostringstream name;
      name << "frame_" << std::setw(2) << std::setfill('0') << frame.k << ".geojson";
      write_text(dir / "frames" / name.str(), frame_geojson(grid, frame));
      ++frames;
    }
  }

  nlohmann::ordered_json summary;
  summary["fault_buses"] = buses;
  summary["delta_p"] = c.number("fault.delta_p");
  summary["delta_p_unit"] = grid.units == Units::si ? "MW" : "p.u.";
  summary["dt_s"] = base.dt;
  summary["n_sim"] = base.n_sim;
  summary["model"] = c.text("fault.model");
  summary["M_b"] = run.magnitude;
  summary["M_b_generators"] = run.magnitude_generators;
  summary["max_abs_rocof_hz_s"] = run.rocof.size() ? run.rocof.cwiseAbs().maxCoeff() : 0.0;
  summary["slack_bus"] = slack_bus(grid);
  summary["frames"] = frames;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << "M_b = " << format_double(run.magnitude) << " Hz/s\n";
  return 0;
}

int cmd_spectral(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  const GridModel grid = load_grid(c).grid;
  const auto laplacian = build_laplacian(grid);
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(c.integer("spectral.k")), laplacian.rows());
  const Modes modes = slow_modes(laplacian, k);
  std::vector<BusId> ids;
  for (const auto& bus : grid.buses) ids.push_back(bus.id);
  write_text(dir / "modes.csv", modes_csv(modes, ids));

  const Eigen::VectorXd weight = fiedler_weight(grid);
  std::ostringstream fw;
  fw << "bus_id,kind,u2_sq\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fw << ids[i] << ',' << (grid.buses[i].kind == BusKind::generator ? "generator" : "load") << ','
       << format_double(weight(static_cast<Eigen::Index>(i))) << '\n';
  }
  write_text(dir / "fiedler_sq.csv", fw.str());

  HomogeneousParams params{c.number("spectral.m"), c.number("spectral.d")};
  if (params.m == 0.0) {
    double total = 0.0;
    int count = 0;
    for (const auto& bus : grid.buses) {
      if (bus.inertia > 0.0) {
        total += bus.inertia;
        ++count;
      }
    }
    if (count == 0) throw InputError("no bus carries inertia; set spectral.m");
    params.m = total / count;
  }
  if (params.d == 0.0) {
    double total = 0.0;
    for (const auto& bus : grid.buses) total += bus.damping;
    params.d = total / static_cast<double>(grid.size());
  }
  const double dt = c.number("spectral.dt");
  std::ostringstream ts;
  ts << "mode,eigenvalue,nu_dt,status\n";
  for (Eigen::Index a = 1; a < modes.count(); ++a) {
    const double gamma = params.gamma();
    const double nu_squared = modes.eigenvalues(a) / params.m - 0.25 * gamma * gamma;
    ts << a + 1 << ',' << format_double(modes.eigenvalues(a)) << ',';
    if (nu_squared > 0.0) ts << format_double(std::sqrt(nu_squared) * dt) << ",underdamped\n";
    else ts << ",overdamped\n";
  }
  write_text(dir / "timescales.csv", ts.str());
  out << "lambda_2 = " << format_double(modes.eigenvalues(1)) << '\n';
  return 0;
}

int cmd_sweep(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  const GridModel grid = load_grid(c).grid;
  const FaultScenario base = base_scenario(c, grid);
  std::vector<BusId> buses = bus_list(c, "sweep.faults");
  if (buses.empty()) {
    for (const auto& bus : grid.buses) {
      if (bus.kind == BusKind::generator && bus.power >= base.delta_p) buses.push_back(bus.id);
    }
  }
  if (buses.empty()) throw InputError("no generator can lose delta_p");
  std::vector<FaultScenario> faults;
  for (auto bus : buses) {
    FaultScenario s = base;
    s.bus = bus;
    faults.push_back(s);
  }
  const double m_sys0 = grid.total_inertia();
  std::vector<double> levels;
  for (double fraction : c.numbers("sweep.levels")) levels.push_back(fraction * m_sys0);
  if (levels.empty()) throw InputError("config: sweep.levels is empty");

  SweepOptions options;
  options.workers = static_cast<int>(c.integer("sweep.workers"));
  options.simulation = simulation_options(c);
  options.step.increment_fraction = c.number("sweep.increment_fraction");
  options.step.base_unit_fraction = c.number("sweep.base_unit_fraction");
  const auto first_seed = static_cast<std::uint64_t>(c.integer("sweep.seed"));
  const long seeds = c.integer("sweep.seeds");
  if (seeds < 1) throw InputError("config: sweep.seeds must be at least 1");

  SweepResult all;
  for (const auto& name : c.list("sweep.procedures")) {
    PlacementProcedure procedure;
    procedure.kind = parse_procedure(name);
    if (procedure.kind == Procedure::custom) throw InputError("custom procedures need weights; not available from config");
    procedure.epsilon_floor = c.number("sweep.epsilon_floor");
    for (long s = 0; s < seeds; ++s) {
      auto result = sweep_inertia(grid, procedure, levels, faults, first_seed + static_cast<std::uint64_t>(s), options);
      all.points.insert(all.points.end(), result.points.begin(), result.points.end());
    }
  }
  write_text(dir / "sweep.csv", sweep_csv(all));
  out << "sweep: " << all.points.size() << " points\n";
  return 0;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 failed for " + path);
  std::ostringstream os;
  for (unsigned int i = 0; i < length; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency disturbance propagation in transmission grids"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  int workers = 0;
  app.add_option("-c,--config", config_file, "INI config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override, section.key=value (repeatable)");
  app.add_option("-o,--out", output_dir, "Output directory");
  auto* build = app.add_subcommand("build", "Build a grid artifact");
  auto* fault = app.add_subcommand("fault", "Simulate a fault and report RoCoF");
  auto* spectral = app.add_subcommand("spectral", "Slow Laplacian modes and timescales");
  auto* sweep = app.add_subcommand("sweep", "Inertia placement sweep");
  sweep->add_option("-j,--workers", workers, "Worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    Config config;
    if (!config_file.empty()) config.merge_file(config_file);
    for (const auto& o : overrides) config.apply_override(o);
    if (!output_dir.empty()) config.set("output.dir", output_dir);
    if (workers > 0) config.set("sweep.workers", std::to_string(workers));
    if (build->parsed()) return cmd_build(config, out);
    if (fault->parsed()) return cmd_fault(config, out);
    if (spectral->parsed()) return cmd_spectral(config, out);
    if (sweep->parsed()) return cmd_sweep(config, out);
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gridfreq::cli
