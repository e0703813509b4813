#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "gridfreq/assembly.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/ingestion.hpp"
#include "gridfreq/io.hpp"

using namespace gridfreq;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(GRIDFREQ_TEST_DATA) / "mini";

GridModel raw_mini() { return load_grid_files(kData / "buses.csv", kData / "lines.csv", kData / "generators.csv"); }

}  // namespace

TEST(Ingestion, LoadsSiGridAndDropsIsland) {
  const GridModel grid = raw_mini();
  EXPECT_EQ(grid.units, Units::si);
  EXPECT_EQ(grid.size(), 7u);
  EXPECT_EQ(grid.generators.size(), 4u);
  EXPECT_DOUBLE_EQ(grid.generators[0].rated_power, 900e6);
  EXPECT_DOUBLE_EQ(grid.generators[1].inertia_constant, technology_defaults(Technology::gas).inertia_constant);
}

TEST(Ingestion, TransformerAndLineSusceptance) {
  const GridModel grid = raw_mini();
  for (const auto& line : grid.lines) {
    if (line.from == 2 && line.to == 3) EXPECT_DOUBLE_EQ(line.susceptance, 1.0 / 40.0);
    if (line.from == 1 && line.to == 2) EXPECT_DOUBLE_EQ(line.susceptance, 1.0 / (kReactance380 * 52.0));
  }
}

TEST(Ingestion, MalformedRowNamesLine) {
  const fs::path dir = fs::temp_directory_path() / "gridfreq_bad_lines";
  fs::create_directories(dir);
  write_text(dir / "lines.csv", "from,to,length_km,voltage_kv\n1,2,52,380\n1,99,10,380\n");
  try {
    load_grid_files(kData / "buses.csv", dir / "lines.csv", kData / "generators.csv");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("lines.csv:3"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

TEST(Ingestion, HaversineQuarterMeridian) {
  EXPECT_NEAR(haversine_km({0.0, 0.0}, {90.0, 0.0}), 6371.0 * std::numbers::pi / 2.0, 1.0);
}

TEST(Ingestion, NationalLoadIsConservedPerCountry) {
  const GridModel grid = raw_mini();
  const auto loads = distribute_national_loads(grid, load_towns(kData / "towns.csv"),
                                               load_national_loads(kData / "national_loads.csv"), {});
  double aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double l = loads(static_cast<Eigen::Index>(i));
    EXPECT_GE(l, 0.0);
    if (l > 0.0) EXPECT_EQ(grid.buses[i].kind, BusKind::load);
    (grid.buses[i].country == "AA" ? aa : bb) += l;
  }
  EXPECT_NEAR(aa, 900e6, 1e-3);
  EXPECT_NEAR(bb, 700e6, 1e-3);
}

TEST(Ingestion, StrictModeRejectsUnmatchedTown) {
  LoadDistributionConfig config;
  config.strict = true;
  EXPECT_THROW(distribute_national_loads(raw_mini(), load_towns(kData / "towns.csv"),
                                         load_national_loads(kData / "national_loads.csv"), config),
               InputError);
}

TEST(Ingestion, DerivedParameters) {
  const double omega0 = 2.0 * std::numbers::pi * 50.0;
  GeneratorRecord record{1, Technology::nuclear, 1000e6, 6.0, 10.0};
  const double m = derive_inertia(record, omega0);
  EXPECT_DOUBLE_EQ(m, 2.0 * 6.0 * 1000e6 / omega0);
  DampingConfig config;
  EXPECT_DOUBLE_EQ(derive_generator_damping(record, m, config), 0.5 * m);
  config.per_technology[Technology::nuclear] = 0.2;
  EXPECT_DOUBLE_EQ(derive_generator_damping(record, m, config), 0.2 * m);
  EXPECT_GT(derive_load_damping(100e6, 1.5, omega0), 0.0);
  EXPECT_THROW(derive_load_damping(100e6, 7.0, omega0), InputError);
}

TEST(Assembly, OperatingPointIsValidAndBalanced) {
  const GridModel raw = raw_mini();
  const auto loads = distribute_national_loads(raw, load_towns(kData / "towns.csv"),
                                               load_national_loads(kData / "national_loads.csv"), {});
  AssemblyReport report;
  const GridModel grid = assemble_operating_point(raw, loads, {}, &report);
  EXPECT_TRUE(validate(grid).ok());
  double balance = 0.0;
  for (const auto& bus : grid.buses) balance += bus.power;
  EXPECT_NEAR(balance, 0.0, 1e-6 * total_load(grid));
  EXPECT_EQ(report.dispatch.output.size(), raw.generators.size());
  // Hydro at 5 $/MWh and nuclear at 10 fill first; coal covers the rest; gas stays off.
  EXPECT_DOUBLE_EQ(report.dispatch.output[3], 500e6);
  EXPECT_DOUBLE_EQ(report.dispatch.output[0], 900e6);
  EXPECT_NEAR(report.dispatch.output[2], 200e6, 1e-3);
  EXPECT_DOUBLE_EQ(report.dispatch.output[1], 0.0);
}

TEST(Ingestion, DistributionIsScaleInvariantInPopulation) {
  const GridModel grid = raw_mini();
  auto towns = load_towns(kData / "towns.csv");
  const auto national = load_national_loads(kData / "national_loads.csv");
  const auto base = distribute_national_loads(grid, towns, national, {});
  for (auto& town : towns) town.population *= 2;
  const auto doubled = distribute_national_loads(grid, towns, national, {});
  EXPECT_LT((base - doubled).cwiseAbs().maxCoeff(), 1e-9 * base.sum());
  EXPECT_NEAR(base.sum(), 1600e6, 1e-9 * 1600e6);
}

TEST(Ingestion, MissingTechnologyInDampingTable) {
  DampingConfig config;
  config.per_technology[Technology::hydro] = 0.5;
  EXPECT_THROW(derive_generator_damping({1, Technology::other, 1e8, 3.0, 7.0}, 1e6, config), InputError);
}
