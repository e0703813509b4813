#include <atomic>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gridfreq/detail/parallel.hpp"
#include "gridfreq/error.hpp"
#include "gridfreq/placement.hpp"
#include "gridfreq/spectral.hpp"

using namespace gridfreq;

TEST(Procedure, NamesRoundTrip) {
  EXPECT_EQ(parse_procedure("F"), Procedure::fiedler);
  EXPECT_EQ(parse_procedure("nF"), Procedure::non_fiedler);
  EXPECT_EQ(parse_procedure(to_string(Procedure::uniform)), Procedure::uniform);
  EXPECT_THROW(parse_procedure("random"), InputError);
}

TEST(SamplingWeights, ShapesFollowFiedlerAmplitude) {
  const Eigen::Vector3d u2(0.5, 0.0, 0.25);
  PlacementProcedure p;
  p.kind = Procedure::fiedler;
  EXPECT_TRUE(sampling_weights(u2, p).isApprox(Eigen::Vector3d(2.0 / 3, 0.0, 1.0 / 3)));
  p.kind = Procedure::non_fiedler;
  const Eigen::VectorXd nf = sampling_weights(u2, p);
  EXPECT_NEAR(nf.sum(), 1.0, 1e-15);
  EXPECT_GT(nf(1), 0.99);
  p.kind = Procedure::uniform;
  EXPECT_TRUE(sampling_weights(u2, p).isApprox(Eigen::Vector3d::Constant(1.0 / 3)));
}

TEST(SamplingWeights, OnlyGeneratorsAreEligible) {
  const GridModel grid = fixtures::barbell();
  PlacementProcedure p;
  const Eigen::VectorXd w = sampling_weights(grid, fiedler_weight(grid), p);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_EQ(w(static_cast<Eigen::Index>(i)) > 0.0, grid.buses[i].kind == BusKind::generator);
}

TEST(ModifyInertia, HitsTargetInBothDirections) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd reference = bus_inertia(grid);
  PlacementProcedure p;
  p.kind = Procedure::fiedler;
  const Eigen::VectorXd w = sampling_weights(grid, fiedler_weight(grid), p);
  Rng rng(4);
  const double m0 = grid.total_inertia();
  const GridModel less = modify_inertia(grid, w, 0.6 * m0, Direction::remove, rng, reference);
  EXPECT_NEAR(less.total_inertia(), 0.6 * m0, 1e-12 * m0);
  EXPECT_TRUE(validate(less).ok() || validate(less).has("bus.inertia-generator"));
  const GridModel more = modify_inertia(less, w, 1.3 * m0, Direction::add, rng, reference);
  EXPECT_NEAR(more.total_inertia(), 1.3 * m0, 1e-12 * m0);
  for (const auto& bus : more.buses) {
    if (bus.kind == BusKind::load) EXPECT_EQ(bus.inertia, 0.0);
  }
  EXPECT_THROW(modify_inertia(grid, w, 2.0 * m0, Direction::remove, rng, reference), InputError);
}

TEST(TransferInertia, ConservesSystemInertia) {
  const GridModel grid = fixtures::barbell();
  const Eigen::VectorXd reference = bus_inertia(grid);
  const Eigen::VectorXd u2 = fiedler_weight(grid);
  PlacementProcedure from, to;
  from.kind = Procedure::fiedler;
  to.kind = Procedure::non_fiedler;
  Rng rng(8);
  const GridModel moved = transfer_inertia(grid, sampling_weights(grid, u2, from), sampling_weights(grid, u2, to),
                                           4.0, rng, reference);
  EXPECT_NEAR(moved.total_inertia(), grid.total_inertia(), 1e-12);
  EXPECT_LT(bus_inertia(moved).head(12).sum(), bus_inertia(grid).head(12).sum());
}

TEST(Sweep, ReportsEveryLevelAndFault) {
  const GridModel grid = fixtures::barbell();
  std::vector<FaultScenario> faults(2);
  faults[0].bus = 0;
  faults[1].bus = 14;
  for (auto& f : faults) f.delta_p = 0.1;
  PlacementProcedure p;
  const double m0 = grid.total_inertia();
  const auto result = sweep_inertia(grid, p, {0.6 * m0, 0.8 * m0}, faults, 3);
  ASSERT_EQ(result.points.size(), 4u);
  EXPECT_DOUBLE_EQ(result.points[0].m_sys, 0.8 * m0);
  EXPECT_EQ(result.points[1].fault_bus, 14);
  EXPECT_THROW(sweep_inertia(grid, p, {0.5 * m0, 1.5 * m0}, faults, 3), InputError);
  const std::string csv = sweep_csv(result);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "procedure,seed,M_sys_GWs2,fault_bus,u2b_sq,M_b");
}

TEST(Parallel, RunsEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  EXPECT_THROW(parallel_for(10, 3,
                                    [](std::size_t i) {
                                      if (i == 7) throw NumericalError("boom");
                                    }),
               NumericalError);
}
