#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gridfreq/dispatch.hpp"
#include "gridfreq/error.hpp"

using namespace gridfreq;

namespace {

// Three buses in a line: 0 -(1)- 1 -(2)- 2.
GridModel chain() {
  GridModel grid;
  for (BusId id : {0, 1, 2}) {
    Bus bus;
    bus.id = id;
    bus.kind = id == 1 ? BusKind::load : BusKind::generator;
    bus.inertia = id == 1 ? 0.0 : 1.0;
    bus.damping = 1.0;
    grid.buses.push_back(bus);
  }
  grid.lines = {{0, 1, 1.0, 1.0, 0.0}, {1, 2, 2.0, 1.0, 0.0}};
  return grid;
}

}  // namespace

TEST(DcPowerFlow, MatchesHandSolution) {
  const GridModel grid = chain();
  Eigen::VectorXd p(3);
  p << 1.0, -1.5, 0.5;
  const Eigen::VectorXd theta = dc_power_flow(grid, p, 0);
  // Flow 0->1 is 1 with B = 1; flow 2->1 is 0.5 with B = 2.
  EXPECT_NEAR(theta(0), 0.0, 1e-15);
  EXPECT_NEAR(theta(1), -1.0, 1e-12);
  EXPECT_NEAR(theta(2), -0.75, 1e-12);
  p(0) = 2.0;
  EXPECT_THROW(dc_power_flow(grid, p, 0), InputError);
}

TEST(Dispatch, SlackIsLargestCapacityBus) {
  GridModel grid = chain();
  grid.generators = {{0, Technology::gas, 1.0, 5.0, 50.0}, {2, Technology::hydro, 0.7, 3.0, 5.0},
                     {2, Technology::hydro, 0.7, 3.0, 5.0}};
  EXPECT_EQ(slack_bus(grid), 2);
  grid.generators.clear();
  grid.buses[0].power = 0.3;
  grid.buses[2].power = 0.3;
  EXPECT_EQ(slack_bus(grid), 0);
}

TEST(Dispatch, MeritOrderFillsCheapestFirst) {
  DispatchProblem problem;
  problem.grid = chain();
  problem.loads = Eigen::Vector3d(0.0, 1.2, 0.0);
  problem.generators = {{0, Technology::gas, 1.0, 5.0, 50.0}, {2, Technology::hydro, 0.5, 3.0, 5.0},
                        {0, Technology::nuclear, 0.4, 6.0, 10.0}};
  const auto result = economic_dispatch(problem);
  EXPECT_DOUBLE_EQ(result.output[1], 0.5);
  EXPECT_DOUBLE_EQ(result.output[2], 0.4);
  EXPECT_DOUBLE_EQ(result.output[0], 1.2 - 0.5 - 0.4);
  EXPECT_NEAR(result.injections.sum(), 0.0, 1e-12);
  EXPECT_NEAR(result.objective, 0.5 * 5 + 0.4 * 10 + (1.2 - 0.9) * 50, 1e-9);
}

TEST(Dispatch, InsufficientCapacityIsInputError) {
  DispatchProblem problem;
  problem.grid = chain();
  problem.loads = Eigen::Vector3d(0.0, 3.0, 0.0);
  problem.generators = {{0, Technology::gas, 1.0, 5.0, 50.0}};
  EXPECT_THROW(economic_dispatch(problem), InputError);
}

TEST(Dispatch, BindingLineLimitForcesRedispatch) {
  DispatchProblem problem;
  problem.grid = chain();
  problem.loads = Eigen::Vector3d(0.0, 1.0, 0.0);
  problem.generators = {{0, Technology::hydro, 2.0, 3.0, 5.0}, {2, Technology::gas, 2.0, 5.0, 50.0}};
  problem.line_limits = {0.6, 10.0};
  const auto result = economic_dispatch(problem);
  EXPECT_NEAR(result.output[0], 0.6, 1e-9);
  EXPECT_NEAR(result.output[1], 0.4, 1e-9);
}

TEST(LinearProgram, SolvesSmallProblem) {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  x = 1.6, y = 1.2.
  LinearProgram lp;
  lp.c = Eigen::Vector2d(-1.0, -1.0);
  lp.a_ub.resize(2, 2);
  lp.a_ub << 1, 2, 3, 1;
  lp.b_ub = Eigen::Vector2d(4.0, 6.0);
  lp.a_eq.resize(0, 2);
  lp.b_eq.resize(0);
  const Eigen::VectorXd x = solve_lp(lp);
  EXPECT_NEAR(x(0), 1.6, 1e-12);
  EXPECT_NEAR(x(1), 1.2, 1e-12);
}

TEST(LinearProgram, InfeasibleIsReported) {
  LinearProgram lp;
  lp.c = Eigen::Vector2d(1.0, 1.0);
  lp.a_eq.resize(1, 2);
  lp.a_eq << 1, 1;
  lp.b_eq = Eigen::VectorXd::Constant(1, 3.0);
  lp.a_ub.resize(1, 2);
  lp.a_ub << 1, 1;
  lp.b_ub = Eigen::VectorXd::Constant(1, 2.0);
  EXPECT_ANY_THROW(solve_lp(lp));
}
