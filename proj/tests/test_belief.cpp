#include <gtest/gtest.h>

#include "support.hpp"

using namespace remp;
using remp::testing::truth_a;
using remp::testing::truth_b;

TEST(BeliefParams, Validation) {
  EXPECT_THROW((BeliefParams{0.0, 0.01, 0.5}.validate()), Error);
  EXPECT_THROW((BeliefParams{10.0, 0.5, 0.5}.validate()), Error);
  EXPECT_THROW((BeliefParams{10.0, 0.01, 1.0}.validate()), Error);
  EXPECT_NO_THROW(BeliefParams{}.validate());
}

TEST(Belief, PosteriorMatchesBayesRule) {
  EXPECT_DOUBLE_EQ(posterior(0.5, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(posterior(0.5, 0.0), 0.0);
  EXPECT_NEAR(posterior(0.5, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(posterior(0.3, 0.8), 0.3 * 0.8 / (0.3 * 0.8 + 0.7 * 0.2), 1e-15);
}

TEST(Belief, TrajectoryDistanceIsMinimumSquared) {
  std::vector<Point2> path{{0.0, 0.0}, {0.1, 0.0}};
  EXPECT_NEAR(trajectory_distance(path, Point2(0.1, 0.05)), 0.0025, 1e-15);
  EXPECT_NEAR(trajectory_distance(path, Point2(-0.03, 0.04)), 0.0025, 1e-15);
}

TEST(Belief, VisitedCellsSaturate) {
  BeliefParams bp;
  bp.gamma = 60.0;
  Rng rng(1);
  for (double b0 : {0.05, 0.5, 0.9}) {
    bp.b0 = b0;
    auto arm = robot_a();
    auto traj = linear_interpolation(remp::testing::random_config(arm, rng), remp::testing::random_config(arm, rng), 20);
    auto b = update_belief(uniform_belief(truth_a().grid, bp), arm, traj, bp);
    for (const auto& p : traj.ee_path(arm)) EXPECT_EQ(b.lookup(p), 1.0 - bp.delta);
  }
}

TEST(Belief, StaysClampedUnderArbitraryUpdates) {
  Rng rng(2);
  BeliefParams bp;
  for (int trial = 0; trial < 20; ++trial) {
    bp.gamma = uniform(rng, 1.0, 5000.0);
    BeliefMap b = uniform_belief(truth_b().grid, bp);
    for (int k = 0; k < 8; ++k) {
      std::vector<Point2> path;
      for (int i = 0; i < 10; ++i) path.emplace_back(uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4));
      b = update_belief(b, path, bp);
      for (double v : b.values()) {
        ASSERT_GE(v, bp.delta);
        ASSERT_LE(v, 1.0 - bp.delta);
      }
    }
  }
}

TEST(Belief, FarCellsBarelyMoveWithLargeGamma) {
  BeliefParams bp;
  bp.gamma = 500.0;
  std::vector<Point2> path{{0.1, 0.0}};
  auto b = update_belief(uniform_belief(truth_a().grid, bp), path, bp);
  // 0.2 m away: likelihood exp(-500 * 0.04) is tiny, so belief drops to delta
  EXPECT_EQ(b.lookup(Point2(-0.1, 0.0)), bp.delta);
  // a cell one spacing from the waypoint's cell
  const double d = 0.005 * 0.005;
  const double l = std::exp(-bp.gamma * d);
  EXPECT_NEAR(b.lookup(Point2(0.11, 0.0)), posterior(0.5, l), 1e-12);
}

TEST(Belief, InterpolationAgreesAtCentersAndIsBilinear) {
  auto g = WorkspaceGrid::default_grid();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 + 0.8 * static_cast<double>(i % 7) / 6.0;
  BeliefMap b(g, v, 0.01);
  for (std::size_t i = 0; i < g.size(); i += 97) EXPECT_NEAR(b.interpolate(g.center(i)), b.at(i), 1e-12);
  const Point2 p = g.center(g.index(10, 10)) + Point2(0.003, 0.006);
  const double b00 = b.at(g.index(10, 10)), b10 = b.at(g.index(11, 10));
  const double b01 = b.at(g.index(10, 11)), b11 = b.at(g.index(11, 11));
  const double expect = 0.7 * 0.4 * b00 + 0.3 * 0.4 * b10 + 0.7 * 0.6 * b01 + 0.3 * 0.6 * b11;
  Point2 grad;
  EXPECT_NEAR(b.interpolate(p, &grad), expect, 1e-12);
  const double h = 1e-7;
  EXPECT_NEAR(grad.x(), (b.interpolate(p + Point2(h, 0)) - b.interpolate(p - Point2(h, 0))) / (2 * h), 1e-5);
  EXPECT_NEAR(grad.y(), (b.interpolate(p + Point2(0, h)) - b.interpolate(p - Point2(0, h))) / (2 * h), 1e-5);
  EXPECT_EQ(b.interpolate(Point2(1.0, 1.0)), 0.01);
}

TEST(Iou, PerfectIndicatorScoresOne) {
  EXPECT_DOUBLE_EQ(iou(indicator_belief(truth_a(), 0.01), truth_a()), 1.0);
  EXPECT_DOUBLE_EQ(iou(indicator_belief(truth_a(), 0.01, true), truth_a()), 0.0);
}

TEST(Iou, UniformPriorAtThresholdPredictsNothing) {
  EXPECT_DOUBLE_EQ(iou(uniform_belief(truth_a().grid, BeliefParams{}), truth_a()), 0.0);
}

TEST(Iou, SetArithmetic) {
  std::vector<bool> truth(36, false), pick(36, false);
  for (int i = 0; i < 12; ++i) truth[i] = pick[i] = true;
  EXPECT_DOUBLE_EQ(iou_of_sets(pick, truth), 1.0);
  pick[20] = true;
  EXPECT_DOUBLE_EQ(iou_of_sets(pick, truth), 12.0 / 13.0);
  EXPECT_DOUBLE_EQ(iou_of_sets(std::vector<bool>(36, false), truth), 0.0);
  EXPECT_DOUBLE_EQ(iou_of_sets(std::vector<bool>(36, false), std::vector<bool>(36, false)), 1.0);
  EXPECT_THROW(iou_of_sets(std::vector<bool>(3), truth), Error);
}

TEST(Iou, QueriesOffGridAreRejected) {
  auto b = indicator_belief(truth_a(), 0.01);
  std::vector<Point2> q{{0.0, 0.0}, {0.19, 0.0}};
  EXPECT_DOUBLE_EQ(iou_on_queries(b, truth_a(), q), 1.0);
  q.emplace_back(0.5, 0.5);
  try {
    iou_on_queries(b, truth_a(), q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_bounds);
  }
}

TEST(Misalignment, MatchesOracleAndDropsAfterObservation) {
  BeliefParams bp;
  bp.gamma = 60.0;
  auto b = uniform_belief(truth_a().grid, bp);
  EXPECT_NEAR(misalignment(b, truth_a()), 0.5 * static_cast<double>(truth_a().grid.size()), 1e-9);
  Rng rng(4);
  auto after = remp::testing::random_belief(robot_a(), truth_a(), bp, rng, 1);
  EXPECT_NEAR(misalignment(after, truth_a()), remp::testing::oracle_misalignment(after, truth_a()), 1e-9);
  EXPECT_NEAR(misalignment(indicator_belief(truth_a(), bp.delta), truth_a()),
              bp.delta * static_cast<double>(truth_a().grid.size()), 1e-9);
}

TEST(Belief, MismatchedGridsThrow) {
  WorkspaceGrid small({-0.1, 0.1}, {-0.1, 0.1}, 21, 21);
  BeliefMap b = uniform_belief(small, BeliefParams{});
  try {
    iou(b, truth_a());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
  EXPECT_THROW(BeliefMap(small, std::vector<double>(3, 0.5), 0.01), Error);
}
