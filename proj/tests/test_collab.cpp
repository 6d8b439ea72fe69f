#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support.hpp"

using namespace remp;
using remp::testing::truth_a;
using remp::testing::truth_b;

namespace {

std::vector<std::size_t> ids_where(const TableScene& s, bool reachable) {
  std::vector<std::size_t> out;
  for (const auto& o : s.objects) {
    if (o.robot_reachable == reachable) out.push_back(o.id);
  }
  return out;
}

}  // namespace

TEST(Scene, TwoReachableTwoUnreachable) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = sample_scene(truth_b(), seed);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s.reachable_count(), 2u);
    std::set<std::pair<double, double>> positions;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(s.objects[i].id, i);
      EXPECT_EQ(s.objects[i].robot_reachable, truth_b().reachable_at(s.objects[i].position));
      positions.insert({s.objects[i].position.x(), s.objects[i].position.y()});
    }
    EXPECT_EQ(positions.size(), 4u);
  }
}

TEST(Scene, IdsAreShuffled) {
  std::set<std::vector<std::size_t>> layouts;
  for (std::uint64_t seed = 0; seed < 30; ++seed) layouts.insert(ids_where(sample_scene(truth_a(), seed), true));
  EXPECT_GT(layouts.size(), 3u);
}

TEST(Game, OptimalPlayEarnsTwo) {
  auto s = sample_scene(truth_a(), 3);
  auto unreach = ids_where(s, false);
  GameState g(s.size());
  for (int r = 0; r < 2; ++r) {
    apply_human_pick(g, unreach[r]);
    auto robot = robot_pick(g, s, truth_a(), std::uint64_t{7});
    ASSERT_TRUE(robot.has_value());
    apply_robot_pick(g, robot);
  }
  EXPECT_TRUE(g.over());
  EXPECT_EQ(g.reward, 2);
  EXPECT_EQ(g.round, 2u);
}

TEST(Game, HumanTakingReachableFirstEarnsOne) {
  // the robot answers the first reachable pick with the other reachable
  // object and then idles, so the table takes three rounds
  auto s = sample_scene(truth_a(), 4);
  auto reach = ids_where(s, true), unreach = ids_where(s, false);
  GameState g(s.size());
  apply_human_pick(g, reach[0]);
  auto r1 = robot_pick(g, s, truth_a(), std::uint64_t{1});
  ASSERT_EQ(r1, reach[1]);
  apply_robot_pick(g, r1);
  apply_human_pick(g, unreach[0]);
  EXPECT_FALSE(robot_pick(g, s, truth_a(), std::uint64_t{2}).has_value());
  apply_human_pick(g, unreach[1]);
  EXPECT_TRUE(g.over());
  EXPECT_EQ(g.reward, 1);
}

TEST(Game, PickingCollectedObjectIsRejected) {
  GameState g(4);
  apply_human_pick(g, 0);
  GameState before = g;
  try {
    apply_human_pick(g, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::conflict);
  }
  EXPECT_EQ(g, before);
  EXPECT_THROW(apply_human_pick(g, 9), Error);
  EXPECT_THROW(apply_robot_pick(g, std::size_t{0}), Error);
}

TEST(HumanPolicy, BoltzmannProbabilities) {
  auto s = sample_scene(truth_a(), 5);
  auto b = indicator_belief(truth_a(), 0.01);
  GameState g(s.size());
  HumanPolicyParams hp{5.0};
  auto p = human_pick_probabilities(g, s, b, hp);
  const double hi = std::exp(5.0 * 0.99), lo = std::exp(5.0 * 0.01);
  for (const auto& o : s.objects) EXPECT_NEAR(p[o.id], (o.robot_reachable ? lo : hi) / (2 * hi + 2 * lo), 1e-12);
  hp.eta = 0.0;
  for (double v : human_pick_probabilities(g, s, b, hp)) EXPECT_NEAR(v, 0.25, 1e-15);
  hp.eta = std::numeric_limits<double>::infinity();
  p = human_pick_probabilities(g, s, b, hp);
  for (const auto& o : s.objects) EXPECT_EQ(p[o.id], o.robot_reachable ? 0.0 : 0.5);
  apply_human_pick(g, ids_where(s, false)[0]);
  hp.eta = 5.0;
  p = human_pick_probabilities(g, s, b, hp);
  EXPECT_EQ(p[ids_where(s, false)[0]], 0.0);
  EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-12);
}

TEST(HumanPolicy, SampledFrequenciesMatchProbabilities) {
  auto s = sample_scene(truth_b(), 6);
  BeliefParams bp;
  bp.gamma = 60.0;
  Rng belief_rng(3);
  auto b = remp::testing::random_belief(robot_b(), truth_b(), bp, belief_rng);
  GameState g(s.size());
  HumanPolicyParams hp{5.0};
  auto p = human_pick_probabilities(g, s, b, hp);
  Rng rng(11);
  std::vector<int> counts(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[human_pick(g, s, b, hp, rng)];
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(counts[k] / double(n), p[k], 0.01);
}

TEST(RobotPolicy, UniformOverReachableRemaining) {
  auto s = sample_scene(truth_b(), 9);
  GameState g(s.size());
  Rng rng(2);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 2000; ++i) {
    auto r = robot_pick(g, s, truth_b(), rng);
    ASSERT_TRUE(r.has_value());
    EXPECT_TRUE(s.objects[*r].robot_reachable);
    ++counts[*r];
  }
  ASSERT_EQ(counts.size(), 2u);
  for (auto [id, c] : counts) EXPECT_NEAR(c / 2000.0, 0.5, 0.05);
}

TEST(Episode, RewardsAreBoundedAndReplayable) {
  BeliefParams bp;
  bp.gamma = 60.0;
  Rng rng(4);
  auto b = remp::testing::random_belief(robot_a(), truth_a(), bp, rng);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto s = sample_scene(truth_a(), seed);
    auto e = run_episode(s, b, truth_a(), HumanPolicyParams{}, seed);
    EXPECT_TRUE(e.reward == 1 || e.reward == 2);
    EXPECT_EQ(e.transcript.final_reward, e.reward);
    auto g = replay(s, e.transcript);
    EXPECT_TRUE(g.over());
    EXPECT_EQ(g.reward, e.reward);
    EXPECT_EQ(e.transcript.object_beliefs.size(), 4u);
    EXPECT_EQ(run_episode(s, b, truth_a(), HumanPolicyParams{}, seed).transcript.rounds.size(),
              e.transcript.rounds.size());
  }
}

TEST(Episode, PerfectBeliefNearlyAlwaysOptimal) {
  auto b = indicator_belief(truth_b(), 0.01);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    sum += run_episode(sample_scene(truth_b(), seed), b, truth_b(), HumanPolicyParams{5.0}, seed).reward;
  }
  EXPECT_GE(sum / 500.0, 1.9);
}

TEST(RandomDemo, ReachesAReachableCell) {
  BeliefParams bp;
  PlannerParams pp;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = random_demo(robot_b(), truth_b(), pp, bp, seed);
    EXPECT_EQ(t.size(), pp.n_waypoints);
    EXPECT_TRUE(truth_b().reachable_at(forward_kinematics(robot_b(), t.back())));
    EXPECT_EQ(random_demo(robot_b(), truth_b(), pp, bp, seed).waypoints, t.waypoints);
  }
}

TEST(HumanPolicy, TwoObjectClosedForm) {
  // one object believed reachable (0.99), one believed unreachable (0.01)
  TableScene s;
  s.objects = {{0, Point2(0.05, 0.0), true}, {1, Point2(0.24, 0.24), false}};
  std::vector<double> v(truth_a().grid.size(), 0.01);
  v[*truth_a().grid.cell_of(s.objects[0].position)] = 0.99;
  BeliefMap b(truth_a().grid, v, 0.01);
  auto p = human_pick_probabilities(GameState(2), s, b, HumanPolicyParams{5.0});
  EXPECT_NEAR(p[1], std::exp(4.95) / (std::exp(4.95) + std::exp(0.05)), 1e-12);
  EXPECT_NEAR(p[1], 0.9926, 5e-5);
}

TEST(Episode, RewardIdentityAndTurnOrder) {
  auto b = uniform_belief(truth_b().grid, BeliefParams{});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = sample_scene(truth_b(), seed);
    auto e = run_episode(s, b, truth_b(), HumanPolicyParams{}, seed);
    std::size_t collected = 0;
    for (std::size_t r = 0; r < e.transcript.rounds.size(); ++r) {
      const auto& rec = e.transcript.rounds[r];
      EXPECT_EQ(rec.round, r + 1);
      collected += 1 + (rec.robot ? 1 : 0);
      EXPECT_EQ(rec.reward, static_cast<int>(collected) - static_cast<int>(r + 1));
      if (rec.robot) EXPECT_TRUE(s.objects[*rec.robot].robot_reachable);
    }
    EXPECT_EQ(collected, s.size());
    EXPECT_LE(e.transcript.rounds.size(), s.size());
  }
}

TEST(Episode, BeliefQualityOrdersMeanReward) {
  const auto& truth = truth_a();
  auto mean = [&](const BeliefMap& b) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      sum += run_episode(sample_scene(truth, seed), b, truth, HumanPolicyParams{5.0}, seed).reward;
    }
    return sum / 500.0;
  };
  const double perfect = mean(indicator_belief(truth, 0.01));
  const double uniform = mean(uniform_belief(truth.grid, BeliefParams{}));
  const double inverted = mean(indicator_belief(truth, 0.01, true));
  EXPECT_GE(perfect, uniform);
  EXPECT_GE(uniform, inverted);
  EXPECT_LT(inverted, 1.1);  // the human nearly always grabs a reachable object first
}

TEST(RandomDemo, EndpointsCoverReachableNeighborhoods) {
  const auto& truth = truth_a();
  const auto& g = truth.grid;
  std::vector<std::size_t> ends;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto t = random_demo(robot_a(), truth, PlannerParams{}, BeliefParams{}, seed);
    ends.push_back(*g.cell_of(forward_kinematics(robot_a(), t.back())));
  }
  std::size_t covered = 0;
  const auto cells = truth.reachable_cells();
  for (auto c : cells) {
    for (auto e : ends) {
      const auto dx = std::abs(static_cast<long>(g.ix_of(c)) - static_cast<long>(g.ix_of(e)));
      const auto dy = std::abs(static_cast<long>(g.iy_of(c)) - static_cast<long>(g.iy_of(e)));
      if (std::max(dx, dy) <= 3) {
        ++covered;
        break;
      }
    }
  }
  EXPECT_GE(static_cast<double>(covered) / static_cast<double>(cells.size()), 0.5);
}
