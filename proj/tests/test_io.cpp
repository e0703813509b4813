#include <filesystem>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "gridfreq/csv.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/io.hpp"

using namespace gridfreq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gridfreq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Csv, ParsesQuotesAndOptionalColumns) {
  const auto table = CsvTable::parse("\xEF\xBB\xBFid,name,value\n1,\"a, b\",2.5\n2,,\n", "t.csv");
  ASSERT_EQ(table.rows(), 2u);
  EXPECT_EQ(table.text(0, "name"), "a, b");
  EXPECT_EQ(table.integer(0, "id"), 1);
  EXPECT_DOUBLE_EQ(table.number(0, "value"), 2.5);
  EXPECT_FALSE(table.optional_number(1, "value").has_value());
  EXPECT_FALSE(table.has_column("other"));
}

TEST(Csv, ErrorsNameFileLineAndField) {
  const auto table = CsvTable::parse("id,value\n1,2\n3,abc\n", "grid.csv");
  try {
    table.number(1, "value");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("grid.csv:3"), std::string::npos) << what;
    EXPECT_NE(what.find("value"), std::string::npos) << what;
  }
  EXPECT_THROW(table.require_columns({"id", "missing"}), InputError);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Artifact, RoundTripPreservesGrid) {
  GridModel grid = fixtures::barbell();
  grid.generators.push_back({0, Technology::gas, 0.4, 5.0, 60.0});
  grid.buses[3].country = "XX";
  const fs::path dir = scratch("artifact");
  write_grid(grid, dir);
  for (const auto& name : kGridFiles) EXPECT_TRUE(fs::exists(dir / name)) << name;
  const GridModel back = read_grid(dir);
  ASSERT_EQ(back.size(), grid.size());
  ASSERT_EQ(back.lines.size(), grid.lines.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(back.buses[i].id, grid.buses[i].id);
    EXPECT_EQ(back.buses[i].kind, grid.buses[i].kind);
    EXPECT_EQ(back.buses[i].power, grid.buses[i].power);
    EXPECT_EQ(back.buses[i].inertia, grid.buses[i].inertia);
    EXPECT_EQ(back.buses[i].damping, grid.buses[i].damping);
    EXPECT_EQ(back.buses[i].country, grid.buses[i].country);
  }
  for (std::size_t i = 0; i < grid.lines.size(); ++i) EXPECT_EQ(back.lines[i].susceptance, grid.lines[i].susceptance);
  ASSERT_EQ(back.generators.size(), 1u);
  EXPECT_EQ(back.generators[0].technology, Technology::gas);
  EXPECT_EQ(back.units, grid.units);
  fs::remove_all(dir);
}

TEST(Artifact, MissingDirectoryIsInputError) {
  EXPECT_THROW(read_grid(fs::temp_directory_path() / "gridfreq_no_such_artifact"), InputError);
}

TEST(Outputs, FrameGeoJsonHasOneFeaturePerBus) {
  const GridModel grid = fixtures::barbell();
  Frame frame;
  frame.k = 3;
  frame.t_begin = 1.5;
  frame.t_end = 2.0;
  frame.rocof = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(grid.size()), 0.0, 1.0);
  const auto json = nlohmann::json::parse(frame_geojson(grid, frame));
  EXPECT_EQ(json["type"], "FeatureCollection");
  ASSERT_EQ(json["features"].size(), grid.size());
  EXPECT_EQ(json["features"][5]["properties"]["bus_id"], grid.buses[5].id);
  EXPECT_DOUBLE_EQ(json["features"][5]["properties"]["rocof_hz_s"].get<double>(), frame.rocof(5));
}

TEST(Outputs, RocofCsvEndsWithMagnitude) {
  Eigen::MatrixXd r(2, 2);
  r << 0.1, -0.2, 0.3, 0.4;
  const std::string csv = rocof_csv(r, {7, 9}, 1.0);
  EXPECT_NE(csv.find("M_b,all,1\n"), std::string::npos) << csv;
}
