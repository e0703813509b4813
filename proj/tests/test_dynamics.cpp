#include <numbers>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gridfreq/dispatch.hpp"
#include "gridfreq/dynamics.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/ode.hpp"

using namespace gridfreq;

TEST(Dopri5, ConvergesOnHarmonicOscillator) {
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  const std::vector<double> times{0.0, 1.0, 10.0};
  std::vector<double> seen;
  OdeOptions<double> options;
  options.rtol = 1e-12;
  options.atol = 1e-14;
  integrate_dopri5<double>(
      [](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        ds(0) = s(1);
        ds(1) = -s(0);
      },
      y, 0.0, std::span<const double>(times), options, [&](double, const Eigen::VectorXd& s) { seen.push_back(s(0)); });
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_NEAR(seen[1], std::cos(1.0), 1e-10);
  EXPECT_NEAR(seen[2], std::cos(10.0), 1e-10);
}

TEST(Dopri5, NonFiniteStateIsNumericalError) {
  Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  const std::vector<double> times{1.0};
  EXPECT_THROW(integrate_dopri5<double>(
                   [](double, const Eigen::VectorXd&, Eigen::VectorXd& ds) { ds(0) = std::nan(""); }, y, 0.0,
                   std::span<const double>(times), OdeOptions<double>{}, [](double, const Eigen::VectorXd&) {}),
               NumericalError);
}

TEST(SteadyState, SolvesPowerFlow) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd theta = steady_state(grid);
  EXPECT_LT(power_flow_residual(grid, theta).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SteadyState, SmallAnglesMatchDcFlow) {
  GridModel grid = fixtures::barbell();
  const Eigen::VectorXd theta = steady_state(grid);
  Eigen::VectorXd p(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) p(static_cast<Eigen::Index>(i)) = grid.buses[i].power;
  const Eigen::VectorXd dc = dc_power_flow(grid, p);
  for (const auto& line : grid.lines) {
    const auto i = static_cast<Eigen::Index>(line.from), j = static_cast<Eigen::Index>(line.to);
    EXPECT_NEAR(theta(i) - theta(j), dc(i) - dc(j), 0.01 * std::abs(dc(i) - dc(j)) + 1e-12);
  }
}

TEST(SteadyState, ZeroInjectionsAndInfeasibleTransfer) {
  GridModel grid = fixtures::barbell();
  for (auto& bus : grid.buses) bus.power = 0.0;
  EXPECT_EQ(steady_state(grid).cwiseAbs().maxCoeff(), 0.0);

  GridModel two;
  for (BusId id : {0, 1}) {
    Bus bus;
    bus.id = id;
    bus.kind = id == 0 ? BusKind::generator : BusKind::load;
    bus.power = id == 0 ? 1.5 : -1.5;
    bus.inertia = id == 0 ? 1.0 : 0.0;
    bus.damping = 1.0;
    two.buses.push_back(bus);
  }
  two.lines = {{0, 1, 1.0, 1.0, 0.0}};
  EXPECT_THROW(steady_state(two), NumericalError);
}

TEST(Fault, ZeroLossStaysAtSteadyState) {
  const GridModel grid = fixtures::barbell();
  FaultScenario s;
  s.bus = 4;
  s.delta_p = 0.0;
  const GridModel faulted = apply_fault(grid, s);
  EXPECT_EQ(faulted.buses[4].kind, BusKind::load);
  EXPECT_EQ(faulted.buses[4].inertia, 0.0);
  EXPECT_EQ(faulted.buses[4].damping, grid.buses[4].damping);
  const auto run = run_fault(grid, steady_state(grid), s);
  EXPECT_LT(run.magnitude, 1e-6);
}

TEST(Fault, RequiresGeneratorWithEnoughPower) {
  const GridModel grid = fixtures::barbell();
  FaultScenario s;
  s.bus = 1;
  s.delta_p = 0.1;
  EXPECT_THROW(apply_fault(grid, s), InputError);
  s.bus = 0;
  s.delta_p = 0.5;
  EXPECT_THROW(apply_fault(grid, s), InputError);
  s.delta_p = 0.1;
  EXPECT_DOUBLE_EQ(apply_fault(grid, s).buses[0].power, 0.1);
}

TEST(Fault, ScenarioNeedsHorizon) {
  FaultScenario s;
  s.t_sim = 2.0;
  EXPECT_THROW(s.check(), InputError);
}

TEST(Rocof, WindowedDifference) {
  Trajectory t;
  t.times = {0.0, 0.5, 1.0};
  t.bus_ids = {4};
  t.theta = Eigen::MatrixXd::Zero(3, 1);
  t.omega.resize(3, 1);
  t.omega << 0.0, -1.0, -1.5;
  const Eigen::MatrixXd r = rocof_series(t, 0.5, 2);
  const double scale = 1.0 / (2.0 * std::numbers::pi * 0.5);
  EXPECT_DOUBLE_EQ(r(0, 0), -1.0 * scale);
  EXPECT_DOUBLE_EQ(r(1, 0), -0.5 * scale);
  EXPECT_DOUBLE_EQ(disturbance_magnitude(r), 1.5 * scale);
  EXPECT_THROW(rocof_series(t, 0.5, 3), InputError);
}

TEST(Simulate, LossLowersFrequencyEverywhere) {
  const GridModel grid = fixtures::barbell();
  FaultScenario s;
  s.bus = 2;
  s.delta_p = 0.1;
  const auto run = run_fault(grid, steady_state(grid), s);
  EXPECT_EQ(run.trajectory.times.size(), 11u);
  EXPECT_TRUE((run.trajectory.omega.row(0).array() == 0.0).all());
  EXPECT_TRUE((run.trajectory.omega.bottomRows(1).array() < 0.0).all());
  EXPECT_GT(run.magnitude, run.magnitude_generators);
}

TEST(Simulate, RefinedToleranceConverges) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd theta0 = steady_state(grid);
  FaultScenario s;
  s.bus = 0;
  s.delta_p = 0.1;
  SimulationOptions loose, tight;
  loose.rtol = 1e-8;
  loose.atol = 1e-10;
  tight.rtol = 1e-12;
  tight.atol = 1e-14;
  const auto a = simulate(apply_fault(grid, s), theta0, s, loose);
  const auto b = simulate(apply_fault(grid, s), theta0, s, tight);
  EXPECT_LT((a.omega - b.omega).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Simulate, LinearizedPowerStepsSuperpose) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd theta0 = steady_state(grid);
  SimulationOptions options;
  options.model = DynamicsModel::linearized;
  options.rtol = 1e-12;
  options.atol = 1e-14;
  const std::vector<double> times{0.0, 1.0, 2.5, 5.0};
  const auto a = simulate_at(apply_power_step(grid, 0, -0.1), theta0, times, 0.01, options);
  const auto b = simulate_at(apply_power_step(grid, 20, -0.05), theta0, times, 0.01, options);
  const auto both = simulate_at(apply_power_step(apply_power_step(grid, 0, -0.1), 20, -0.05), theta0, times, 0.01, options);
  EXPECT_LT((both.omega - a.omega - b.omega).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Simulate, MultiFaultTripsEveryBus) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd theta0 = steady_state(grid);
  FaultScenario a, b;
  a.bus = 0;
  a.delta_p = 0.1;
  b.bus = 20;
  b.delta_p = 0.05;
  const auto both = simulate_multi_fault(grid, theta0, {a, b});
  const auto sequential = simulate(apply_fault(apply_fault(grid, a), b), theta0, a);
  EXPECT_EQ((both.omega - sequential.omega).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(simulate_multi_fault(grid, theta0, {a, a}), InputError);
  b.dt = 0.25;
  EXPECT_THROW(simulate_multi_fault(grid, theta0, {a, b}), InputError);
}

TEST(Frames, OnePerWindow) {
  const GridModel grid = fixtures::barbell();
  FaultScenario s;
  s.bus = 0;
  s.delta_p = 0.1;
  const auto run = run_fault(grid, steady_state(grid), s);
  const auto frames = snapshot_frames(run.trajectory, s.dt, s.n_sim);
  ASSERT_EQ(frames.size(), 10u);
  EXPECT_DOUBLE_EQ(frames[3].t_begin, 1.5);
  EXPECT_LT((frames[3].rocof - run.rocof.row(3).transpose()).cwiseAbs().maxCoeff(), 1e-15);
}
