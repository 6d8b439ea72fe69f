#include <gtest/gtest.h>
#include <unistd.h>

#include "remp/experiment.hpp"
#include "support.hpp"

using namespace remp;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.seeds = 2;
  c.t_max = 3;
  c.episodes_per_cell = 20;
  c.random_rollouts = 4;
  c.target_count = 4;
  c.planner_params.n_restarts = 1;
  return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("remp_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(ExperimentConfig, ParsesAndValidates) {
  auto c = experiment_config_from_json(json::parse(R"({"robots": ["B"], "conditions": ["belief", "random"],
      "T_max": 2, "seeds": 3, "belief_params": {"gamma": 80}, "planner_params": {"beta": 7},
      "grid_search": {"gamma": [30, 60], "alpha": 1}})"));
  EXPECT_EQ(c.robots, std::vector<std::string>{"B"});
  EXPECT_EQ(c.conditions.size(), 2u);
  EXPECT_EQ(c.belief_params.gamma, 80.0);
  EXPECT_EQ(c.planner_params.beta, 7.0);
  EXPECT_EQ(c.planner_params.alpha, default_planner_params().alpha);
  ASSERT_TRUE(c.grid_search.has_value());
  EXPECT_EQ(c.grid_search->gamma.size(), 2u);
  EXPECT_EQ(c.grid_search->beta, std::vector<double>{7.0});
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"T_max": 0})")), Error);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"seeds": 0})")), Error);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"conditions": []})")), Error);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"conditions": ["oracle"]})")), Error);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"robots": ["Q"]})")), Error);
  auto again = experiment_config_from_json(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(ExperimentConfig, ShippedConfigsParse) {
  const std::filesystem::path dir = std::filesystem::path(REMP_SOURCE_DIR) / "configs";
  auto read = [&](const char* name) {
    std::ifstream in(dir / name);
    return experiment_config_from_json(json::parse(in));
  };
  EXPECT_EQ(to_json(read("default.json")), to_json(ExperimentConfig{}));
  auto g = read("grid_search.json");
  ASSERT_TRUE(g.grid_search.has_value());
  EXPECT_EQ(g.grid_search->gamma.size() * g.grid_search->alpha.size() * g.grid_search->beta.size(), 18u);
}

TEST(Experiment, RowCountAndDeterminism) {
  auto c = small_config();
  auto a = run_experiment(c);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_EQ(a.rows.size(), c.conditions.size() * c.robots.size() * c.t_max * c.seeds);
  c.jobs = 2;
  auto b = run_experiment(c);
  EXPECT_EQ(results_csv(a.rows), results_csv(b.rows));
  EXPECT_EQ(summary_csv(a.summary), summary_csv(b.summary));
}

TEST(Experiment, SummaryRecomputesFromRawRows) {
  auto r = run_experiment(small_config());
  auto raw = parse_csv(results_csv(r.rows));
  auto sum = parse_csv(summary_csv(r.summary));
  ASSERT_EQ(raw[0], (std::vector<std::string>{"condition", "robot", "t", "seed", "iou", "mean_reward"}));
  for (std::size_t i = 1; i < sum.size(); ++i) {
    std::vector<double> ious, rewards;
    for (std::size_t j = 1; j < raw.size(); ++j) {
      if (raw[j][0] == sum[i][0] && raw[j][1] == sum[i][1] && raw[j][2] == sum[i][2]) {
        ious.push_back(std::stod(raw[j][4]));
        rewards.push_back(std::stod(raw[j][5]));
      }
    }
    ASSERT_EQ(ious.size(), std::stoul(sum[i][3]));
    double m = 0, mr = 0;
    for (std::size_t k = 0; k < ious.size(); ++k) {
      m += ious[k];
      mr += rewards[k];
    }
    m /= ious.size();
    mr /= rewards.size();
    double ss = 0;
    for (double v : ious) ss += (v - m) * (v - m);
    const double se = std::sqrt(ss / (ious.size() - 1)) / std::sqrt(double(ious.size()));
    EXPECT_NEAR(std::stod(sum[i][4]), m, 1e-12);
    EXPECT_NEAR(std::stod(sum[i][5]), se, 1e-12);
    EXPECT_NEAR(std::stod(sum[i][6]), mr, 1e-12);
  }
}

TEST(Experiment, StaticReplaysBeliefTargetSequence) {
  auto c = small_config();
  auto robot = make_robot("A", c);
  auto curves = run_seed(robot, 4, c, {Condition::belief, Condition::static_model}, 3);
  ASSERT_TRUE(curves[0].ok && curves[1].ok);
  EXPECT_EQ(curves[0].target_log, curves[1].target_log);
  EXPECT_EQ(curves[0].iou[0], curves[1].iou[0]);
  EXPECT_EQ(curves[0].iou[0], 0.0);  // uniform prior at the threshold predicts nothing
  EXPECT_EQ(curves[0].iou.size(), 4u);
  EXPECT_EQ(curves[0].reward.size(), 4u);
}

TEST(Experiment, RunConditionMatchesRunSeed) {
  auto c = small_config();
  auto robot = make_robot("B", c);
  auto single = run_condition(Condition::random, robot, 2, 7, c);
  auto joint = run_seed(robot, 7, c, {Condition::belief, Condition::random}, 2);
  EXPECT_EQ(single.iou, joint[1].iou);
  EXPECT_EQ(single.reward, joint[1].reward);
}

TEST(Experiment, WritesArtifactsAndRejectsUnwritableDir) {
  auto c = small_config();
  c.robots = {"A"};
  c.seeds = 1;
  auto r = run_experiment(c);
  auto dir = temp_dir("artifacts");
  write_experiment_outputs(r, dir);
  for (const char* f : {"results.csv", "summary.csv", "iou.svg", "reward.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream svg(dir / "iou.svg");
  std::string head;
  std::getline(svg, head);
  EXPECT_NE(head.find("<?xml"), std::string::npos);
  write_file(dir / "blocker", "x");
  try {
    write_experiment_outputs(r, dir / "blocker" / "sub");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
  }
  std::filesystem::remove_all(dir);
}

TEST(GridSearch, SinglePointAndArgmax) {
  auto c = small_config();
  c.robots = {"A"};
  c.seeds = 1;
  c.grid_search = GridSearchRanges{{60.0}, {2.0}, {5.0}, {5.0}, 2};
  auto single = grid_search(c);
  ASSERT_EQ(single.table.size(), 1u);
  EXPECT_EQ(single.table[0].gamma, 60.0);
  EXPECT_EQ(single.best, 0u);

  c.grid_search = GridSearchRanges{{120.0, 30.0}, {0.0, 2.0}, {5.0}, {1.0, 5.0}, 2};
  auto g = grid_search(c);
  ASSERT_EQ(g.table.size(), 8u);
  EXPECT_EQ(g.table[0].gamma, 30.0);  // ascending gamma
  for (const auto& cell : g.table) EXPECT_LE(cell.score, g.table[g.best].score);
  for (std::size_t i = 0; i < g.best; ++i) EXPECT_LT(g.table[i].score, g.table[g.best].score);
  // eta only changes the reward column
  EXPECT_EQ(g.table[0].score, g.table[1].score);
  EXPECT_EQ(parse_csv(grid_search_csv(g)).size(), 9u);

  c.grid_search->alpha.clear();
  EXPECT_THROW(grid_search(c), Error);
  c.grid_search.reset();
  EXPECT_THROW(grid_search(c), Error);
}

TEST(ExportSession, BundleShapeAndRoundTrip) {
  auto c = small_config();
  for (auto cond : {Condition::belief, Condition::static_model, Condition::random}) {
    auto b = export_session("B", cond, c, 5, 4);
    EXPECT_EQ(b.demos.size(), 4u);
    EXPECT_EQ(b.beliefs.size(), 4u);
    EXPECT_EQ(b.d_trace.size(), 4u);
    EXPECT_EQ(b.scene.reachable_count(), 2u);
    EXPECT_EQ(b.queries.size(), 36u);
    auto j = to_json(b);
    auto text = j.dump();
    EXPECT_EQ(to_json(bundle_from_json(json::parse(text))).dump(), text);
    EXPECT_EQ(j.at("demos")[0].at("frames").size(), kFramesPerDemo);
    EXPECT_EQ(to_json(export_session("B", cond, c, 5, 4)).dump(), text);
  }
}

TEST(ExportSession, BeliefAndStaticShareTargets) {
  auto c = small_config();
  auto b = export_session("A", Condition::belief, c, 2, 3);
  auto s = export_session("A", Condition::static_model, c, 2, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(b.demos[t].target_index, s.demos[t].target_index);
    EXPECT_EQ(b.demos[t].target, s.demos[t].target);
  }
}

TEST(Experiment, BeliefIouMostlyNonDecreasingOnRobotA) {
  ExperimentConfig c;
  c.episodes_per_cell = 0;
  auto robot = make_robot("A", c);
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto curve = run_seed(robot, seed, c, {Condition::belief}, 4).front();
    ASSERT_TRUE(curve.ok) << curve.diagnostic;
    bool up = true;
    for (std::size_t t = 2; t <= 4; ++t) up = up && curve.iou[t] >= curve.iou[t - 1];
    monotone += up;
  }
  EXPECT_GE(monotone, 16);
}
