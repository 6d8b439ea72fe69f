#pragma once

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "remp/serialization.hpp"

namespace remp {

enum class Condition { belief, static_model, random };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::belief: return "belief";
    case Condition::static_model: return "static";
    case Condition::random: return "random";
  }
  return "belief";
}

inline Condition condition_from_string(std::string_view s) {
  if (s == "belief") return Condition::belief;
  if (s == "static") return Condition::static_model;
  if (s == "random") return Condition::random;
  throw Error(ErrorCode::not_found, "unknown condition '" + std::string(s) + "'");
}

struct GridSearchRanges {
  std::vector<double> gamma;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> eta;
  std::size_t score_t = 5;
};

/// Tuned simulation defaults (see README for how they were chosen).
inline BeliefParams default_belief_params() {
  BeliefParams p;
  p.gamma = 60.0;
  return p;
}

inline PlannerParams default_planner_params() {
  PlannerParams p;
  p.alpha = 2.0;
  return p;
}

struct ExperimentConfig {
  std::vector<std::string> robots{"A", "B"};
  std::vector<Condition> conditions{Condition::belief, Condition::static_model, Condition::random};
  std::size_t t_max = 5;
  std::size_t seeds = 20;
  std::uint64_t seed = 0;  // base seed; cell seeds are seed, seed+1, ...
  std::size_t episodes_per_cell = 500;
  std::size_t random_rollouts = 100;
  std::size_t target_count = 5;  // |G|
  std::size_t start_count = 1;   // |starts|
  double iou_threshold = 0.5;
  std::size_t samples_per_joint = kDefaultSamplesPerJoint;
  WorkspaceGrid grid = WorkspaceGrid::default_grid();
  BeliefParams belief_params = default_belief_params();
  PlannerParams planner_params = default_planner_params();
  HumanPolicyParams human_params;
  std::optional<GridSearchRanges> grid_search;
  std::string output_dir = "out";
  std::size_t jobs = 1;

  void validate() const {
    if (t_max < 1) throw Error(ErrorCode::invalid_argument, "T_max must be >= 1");
    if (seeds < 1) throw Error(ErrorCode::invalid_argument, "seeds must be >= 1");
    if (conditions.empty()) throw Error(ErrorCode::invalid_argument, "conditions must be non-empty");
    if (robots.empty()) throw Error(ErrorCode::invalid_argument, "robots must be non-empty");
    if (target_count < t_max) throw Error(ErrorCode::invalid_argument, "target_count must be >= T_max");
    if (start_count < 1) throw Error(ErrorCode::invalid_argument, "start_count must be >= 1");
    if (random_rollouts < 1) throw Error(ErrorCode::invalid_argument, "random_rollouts must be >= 1");
    for (const auto& r : robots) preset(r);
    belief_params.validate();
    planner_params.validate();
    human_params.validate();
  }
};

inline std::vector<double> range_from_json(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (j.at(key).is_number()) return {j.at(key).get<double>()};
  return j.at(key).get<std::vector<double>>();
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  detail::read_opt(j, "robots", c.robots);
  if (j.contains("conditions")) {
    c.conditions.clear();
    for (const auto& s : j.at("conditions")) c.conditions.push_back(condition_from_string(s.get<std::string>()));
  }
  detail::read_opt(j, "T_max", c.t_max);
  detail::read_opt(j, "seeds", c.seeds);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "episodes_per_cell", c.episodes_per_cell);
  detail::read_opt(j, "random_rollouts", c.random_rollouts);
  detail::read_opt(j, "target_count", c.target_count);
  detail::read_opt(j, "start_count", c.start_count);
  detail::read_opt(j, "iou_threshold", c.iou_threshold);
  detail::read_opt(j, "samples_per_joint", c.samples_per_joint);
  detail::read_opt(j, "output_dir", c.output_dir);
  detail::read_opt(j, "jobs", c.jobs);
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
  if (j.contains("belief_params")) c.belief_params = belief_params_from_json(j.at("belief_params"), c.belief_params);
  if (j.contains("planner_params")) {
    c.planner_params = planner_params_from_json(j.at("planner_params"), c.planner_params);
  }
  if (j.contains("human_params")) c.human_params = human_params_from_json(j.at("human_params"), c.human_params);
  if (j.contains("grid_search")) {
    const auto& g = j.at("grid_search");
    GridSearchRanges r;
    r.gamma = range_from_json(g, "gamma");
    r.alpha = range_from_json(g, "alpha");
    r.beta = range_from_json(g, "beta");
    r.eta = range_from_json(g, "eta");
    detail::read_opt(g, "score_t", r.score_t);
    if (r.gamma.empty()) r.gamma = {c.belief_params.gamma};
    if (r.alpha.empty()) r.alpha = {c.planner_params.alpha};
    if (r.beta.empty()) r.beta = {c.planner_params.beta};
    if (r.eta.empty()) r.eta = {c.human_params.eta};
    c.grid_search = r;
  }
  c.validate();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  json conds = json::array();
  for (auto k : c.conditions) conds.push_back(std::string(to_string(k)));
  json j = {{"robots", c.robots},
            {"conditions", conds},
            {"T_max", c.t_max},
            {"seeds", c.seeds},
            {"seed", c.seed},
            {"episodes_per_cell", c.episodes_per_cell},
            {"random_rollouts", c.random_rollouts},
            {"target_count", c.target_count},
            {"start_count", c.start_count},
            {"iou_threshold", c.iou_threshold},
            {"samples_per_joint", c.samples_per_joint},
            {"grid", to_json(c.grid)},
            {"belief_params", to_json(c.belief_params)},
            {"planner_params", to_json(c.planner_params)},
            {"human_params", to_json(c.human_params)},
            {"output_dir", c.output_dir},
            {"jobs", c.jobs}};
  if (c.grid_search) {
    j["grid_search"] = {{"gamma", c.grid_search->gamma},
                        {"alpha", c.grid_search->alpha},
                        {"beta", c.grid_search->beta},
                        {"eta", c.grid_search->eta},
                        {"score_t", c.grid_search->score_t}};
  }
  return j;
}

/// Arm plus its ground-truth map.
struct RobotSetup {
  std::string name;
  ArmModel arm;
  ReachabilityMap truth;
};

inline RobotSetup make_robot(const std::string& name, const ExperimentConfig& config) {
  ArmModel arm = preset(name);
  return {name, arm, compute_reachability_map(arm, config.grid, config.samples_per_joint)};
}

/// Per-t curves of one condition for one seed; index 0 is the prior.
struct ConditionCurve {
  Condition condition;
  std::vector<double> iou;
  std::vector<double> reward;
  std::vector<std::size_t> target_log;  // target index of each demo (planned conditions)
  std::vector<Trajectory> demos;        // planned conditions only
  std::vector<BeliefMap> beliefs;       // planned conditions only; index 0 is the prior
  bool ok = true;
  std::string diagnostic;
};

namespace detail {

inline double mean_reward(const std::vector<TableScene>& scenes, const ReachabilityMap& truth,
                          const HumanPolicyParams& hp, std::uint64_t seed, std::size_t t,
                          const std::function<const BeliefMap&(std::size_t)>& belief_for) {
  if (scenes.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t e = 0; e < scenes.size(); ++e) {
    sum += run_episode(scenes[e], belief_for(e), truth, hp, derive_seed(seed, 0xe915ULL, e, t)).reward;
  }
  return sum / static_cast<double>(scenes.size());
}

inline std::vector<TableScene> episode_scenes(const ReachabilityMap& truth, std::uint64_t seed, std::size_t n) {
  std::vector<TableScene> scenes;
  scenes.reserve(n);
  for (std::size_t e = 0; e < n; ++e) scenes.push_back(sample_scene(truth, derive_seed(seed, 0x5ce4eULL, e)));
  return scenes;
}

}  // namespace detail

inline CalibrationProblem calibration_problem(const RobotSetup& robot, const ExperimentConfig& config,
                                              std::uint64_t seed, std::size_t demos) {
  CalibrationProblem p;
  p.targets = default_targets(robot.truth, config.target_count, seed);
  p.starts = random_configurations(robot.arm, config.start_count, seed);
  p.demo_count = demos;
  p.belief_params = config.belief_params;
  p.planner_params = config.planner_params;
  p.mode = CalibrationMode::greedy;
  p.seed = seed;
  return p;
}

/// Runs the requested conditions for one (robot, seed) cell. The static
/// condition replays the belief condition's (start, target) sequence with
/// the belief frozen at b0 in the planner; the observer still updates.
inline std::vector<ConditionCurve> run_seed(const RobotSetup& robot, std::uint64_t seed, const ExperimentConfig& config,
                                            const std::vector<Condition>& conditions, std::size_t T) {
  const auto& truth = robot.truth;
  const BeliefMap prior = uniform_belief(truth.grid, config.belief_params);
  const auto scenes = detail::episode_scenes(truth, seed, config.episodes_per_cell);
  const double thr = config.iou_threshold;

  auto wants = [&](Condition c) { return std::find(conditions.begin(), conditions.end(), c) != conditions.end(); };
  std::optional<CalibrationPlan> calib;
  std::string calib_error;
  if (wants(Condition::belief) || wants(Condition::static_model)) {
    try {
      calib = plan_calibration(calibration_problem(robot, config, seed, T), robot.arm, truth, prior);
    } catch (const Error& e) {
      calib_error = e.what();
    }
  }

  auto finish_planned = [&](ConditionCurve& curve) {
    for (std::size_t t = 0; t <= T; ++t) {
      curve.iou.push_back(iou(curve.beliefs[t], truth, thr));
      curve.reward.push_back(detail::mean_reward(scenes, truth, config.human_params, seed, t,
                                                 [&](std::size_t) -> const BeliefMap& { return curve.beliefs[t]; }));
    }
  };

  std::vector<ConditionCurve> out;
  for (Condition c : conditions) {
    ConditionCurve curve{c, {}, {}, {}, {}, {}, true, {}};
    try {
      switch (c) {
        case Condition::belief: {
          if (!calib) throw Error(ErrorCode::planning_failure, calib_error);
          curve.beliefs.push_back(prior);
          for (std::size_t t = 0; t < T; ++t) {
            curve.beliefs.push_back(calib->beliefs[t]);
            curve.demos.push_back(calib->demos[t].plan.trajectory);
            curve.target_log.push_back(calib->demos[t].target_index);
          }
          finish_planned(curve);
          break;
        }
        case Condition::static_model: {
          if (!calib) throw Error(ErrorCode::planning_failure, calib_error);
          curve.beliefs.push_back(prior);
          for (const auto& d : calib->demos) {
            auto plan = plan_static(robot.arm, truth, d.start, d.target, config.belief_params, config.planner_params,
                                    {}, pair_seed(seed, d.target_index, d.start_index));
            curve.beliefs.push_back(update_belief(curve.beliefs.back(), robot.arm, plan.trajectory,
                                                  config.belief_params));
            curve.demos.push_back(std::move(plan.trajectory));
            curve.target_log.push_back(d.target_index);
          }
          finish_planned(curve);
          break;
        }
        case Condition::random: {
          const std::size_t R = config.random_rollouts;
          std::vector<std::vector<BeliefMap>> rollouts(R);
          for (std::size_t r = 0; r < R; ++r) {
            rollouts[r].push_back(prior);
            for (std::size_t t = 0; t < T; ++t) {
              auto traj = random_demo(robot.arm, truth, config.planner_params, config.belief_params,
                                      derive_seed(seed, 0x9a4d0ULL, r, t));
              rollouts[r].push_back(update_belief(rollouts[r].back(), robot.arm, traj, config.belief_params));
            }
          }
          for (std::size_t t = 0; t <= T; ++t) {
            double s = 0.0;
            for (std::size_t r = 0; r < R; ++r) s += iou(rollouts[r][t], truth, thr);
            curve.iou.push_back(s / static_cast<double>(R));
            curve.reward.push_back(detail::mean_reward(
                scenes, truth, config.human_params, seed, t,
                [&](std::size_t e) -> const BeliefMap& { return rollouts[e % R][t]; }));
          }
          break;
        }
      }
    } catch (const Error& e) {
      curve.ok = false;
      curve.diagnostic = std::string(to_string(c)) + " robot " + robot.name + " seed " + std::to_string(seed) +
                         ": " + e.what();
    }
    out.push_back(std::move(curve));
  }
  return out;
}

inline ConditionCurve run_condition(Condition condition, const RobotSetup& robot, std::size_t T, std::uint64_t seed,
                                    const ExperimentConfig& config) {
  return std::move(run_seed(robot, seed, config, {condition}, T).front());
}

// ---------------------------------------------------------------------------
// aggregation and output

struct ResultRow {
  std::string condition;
  std::string robot;
  std::size_t t;
  std::uint64_t seed;
  double iou;
  double mean_reward;
};

struct SummaryRow {
  std::string condition;
  std::string robot;
  std::size_t t;
  std::size_t n;
  double iou_mean, iou_se;
  double reward_mean, reward_se;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<std::string> failures;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {m, sd / std::sqrt(static_cast<double>(xs.size()))};
}

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> g;
  std::vector<std::tuple<std::string, std::string, std::size_t>> order;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.condition, r.robot, r.t);
    if (!g.contains(key)) order.push_back(key);
    g[key].first.push_back(r.iou);
    g[key].second.push_back(r.mean_reward);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& [ious, rewards] = g[key];
    auto [im, ise] = mean_and_se(ious);
    auto [rm, rse] = mean_and_se(rewards);
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), ious.size(), im, ise, rm, rse});
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<RobotSetup> robots;
  for (const auto& name : config.robots) robots.push_back(make_robot(name, config));

  const std::size_t cells = robots.size() * config.seeds;
  std::vector<std::vector<ConditionCurve>> results(cells);
  parallel_for(cells, config.jobs, [&](std::size_t i) {
    const auto& robot = robots[i / config.seeds];
    const std::uint64_t seed = config.seed + i % config.seeds;
    results[i] = run_seed(robot, seed, config, config.conditions, config.t_max);
  });

  ExperimentResult out;
  for (std::size_t ri = 0; ri < robots.size(); ++ri) {
    for (std::size_t ci = 0; ci < config.conditions.size(); ++ci) {
      for (std::size_t s = 0; s < config.seeds; ++s) {
        const auto& curve = results[ri * config.seeds + s][ci];
        if (!curve.ok) {
          out.failures.push_back(curve.diagnostic);
          continue;
        }
        for (std::size_t t = 1; t <= config.t_max; ++t) {
          out.rows.push_back({std::string(to_string(curve.condition)), robots[ri].name, t, config.seed + s,
                              curve.iou[t], curve.reward[t]});
        }
      }
    }
  }
  out.summary = summarize(out.rows);
  return out;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string s = "condition,robot,t,seed,iou,mean_reward\r\n";
  for (const auto& r : rows) {
    s += csv_field(r.condition) + "," + csv_field(r.robot) + "," + std::to_string(r.t) + "," + std::to_string(r.seed) +
         "," + format_double(r.iou) + "," + format_double(r.mean_reward) + "\r\n";
  }
  return s;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = "condition,robot,t,n,iou_mean,iou_se,reward_mean,reward_se\r\n";
  for (const auto& r : rows) {
    s += csv_field(r.condition) + "," + csv_field(r.robot) + "," + std::to_string(r.t) + "," + std::to_string(r.n) +
         "," + format_double(r.iou_mean) + "," + format_double(r.iou_se) + "," + format_double(r.reward_mean) + "," +
         format_double(r.reward_se) + "\r\n";
  }
  return s;
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* condition_color(const std::string& c) {
  if (c == "belief") return "#d62728";
  if (c == "static") return "#1f77b4";
  if (c == "random") return "#7f7f7f";
  return "#000000";
}

}  // namespace detail

/// Mean +/- standard error line plot, one panel per robot.
inline std::string summary_svg(const std::vector<SummaryRow>& rows, bool reward, const std::string& title) {
  std::vector<std::string> robots, conditions;
  std::size_t t_max = 1;
  for (const auto& r : rows) {
    if (std::find(robots.begin(), robots.end(), r.robot) == robots.end()) robots.push_back(r.robot);
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) {
      conditions.push_back(r.condition);
    }
    t_max = std::max(t_max, r.t);
  }
  const double pw = 360, ph = 260, ml = 50, mt = 40, gap = 30;
  const double width = ml + robots.size() * (pw + gap) + 100;
  const double height = mt + ph + 50;
  const double y_max = reward ? 2.0 : 1.0;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << detail::fmt2(width) << "\" height=\""
    << detail::fmt2(height) << "\">\n"
    << "<text x=\"" << detail::fmt2(ml) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
    << "</text>\n";
  for (std::size_t ri = 0; ri < robots.size(); ++ri) {
    const double x0 = ml + ri * (pw + gap);
    auto px = [&](double t) { return x0 + (t_max > 1 ? (t - 1.0) / (t_max - 1.0) : 0.5) * pw; };
    auto py = [&](double v) { return mt + ph - std::clamp(v / y_max, 0.0, 1.0) * ph; };
    s << "<rect x=\"" << detail::fmt2(x0) << "\" y=\"" << detail::fmt2(mt) << "\" width=\"" << detail::fmt2(pw)
      << "\" height=\"" << detail::fmt2(ph) << "\" fill=\"none\" stroke=\"#000\"/>\n";
    s << "<text x=\"" << detail::fmt2(x0 + 5) << "\" y=\"" << detail::fmt2(mt + 15)
      << "\" font-family=\"sans-serif\" font-size=\"12\">robot " << robots[ri] << "</text>\n";
    for (std::size_t t = 1; t <= t_max; ++t) {
      s << "<text x=\"" << detail::fmt2(px(t)) << "\" y=\"" << detail::fmt2(mt + ph + 15)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << t << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
      const double v = y_max * k / 4.0;
      s << "<text x=\"" << detail::fmt2(x0 - 5) << "\" y=\"" << detail::fmt2(py(v) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << detail::fmt2(v) << "</text>\n";
    }
    for (const auto& c : conditions) {
      std::string pts;
      for (const auto& r : rows) {
        if (r.robot != robots[ri] || r.condition != c) continue;
        const double m = reward ? r.reward_mean : r.iou_mean;
        const double se = reward ? r.reward_se : r.iou_se;
        pts += detail::fmt2(px(r.t)) + "," + detail::fmt2(py(m)) + " ";
        s << "<line x1=\"" << detail::fmt2(px(r.t)) << "\" y1=\"" << detail::fmt2(py(m - se)) << "\" x2=\""
          << detail::fmt2(px(r.t)) << "\" y2=\"" << detail::fmt2(py(m + se)) << "\" stroke=\""
          << detail::condition_color(c) << "\"/>\n";
      }
      s << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << detail::condition_color(c) << "\" points=\""
        << pts << "\"/>\n";
    }
  }
  double ly = mt + 10;
  const double lx = ml + robots.size() * (pw + gap);
  for (const auto& c : conditions) {
    s << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ly) << "\" x2=\"" << detail::fmt2(lx + 20)
      << "\" y2=\"" << detail::fmt2(ly) << "\" stroke-width=\"2\" stroke=\"" << detail::condition_color(c) << "\"/>\n"
      << "<text x=\"" << detail::fmt2(lx + 25) << "\" y=\"" << detail::fmt2(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << c << "</text>\n";
    ly += 18;
  }
  s << "</svg>\n";
  return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  f << content;
  if (!f) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::io_error, "cannot create " + dir.string());
}

/// results.csv (raw rows), summary.csv, iou.svg and reward.svg.
inline void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file(dir / "results.csv", results_csv(result.rows));
  write_file(dir / "summary.csv", summary_csv(result.summary));
  write_file(dir / "iou.svg", summary_svg(result.summary, false, "Reachability IoU vs demonstrations"));
  write_file(dir / "reward.svg", summary_svg(result.summary, true, "Mean collaboration reward vs demonstrations"));
}

// ---------------------------------------------------------------------------
// grid search

struct GridCell {
  double gamma, alpha, beta, eta;
  double score;        // mean belief-condition IoU at score_t
  double mean_reward;  // mean episode reward at score_t
};

struct GridSearchResult {
  std::vector<GridCell> table;
  std::size_t best;
};

/// Exhaustive sweep over (gamma, alpha, beta, eta) scored by the
/// belief-condition IoU at score_t averaged over robots and seeds. Ties go
/// to the smaller gamma, then to the earlier cell.
inline GridSearchResult grid_search(const ExperimentConfig& config) {
  if (!config.grid_search) throw Error(ErrorCode::invalid_argument, "config has no grid_search ranges");
  auto ranges = *config.grid_search;
  if (ranges.gamma.empty() || ranges.alpha.empty() || ranges.beta.empty() || ranges.eta.empty()) {
    throw Error(ErrorCode::invalid_argument, "grid_search range is empty");
  }
  if (ranges.score_t < 1) throw Error(ErrorCode::invalid_argument, "score_t must be >= 1");
  std::sort(ranges.gamma.begin(), ranges.gamma.end());
  std::vector<RobotSetup> robots;
  for (const auto& name : config.robots) robots.push_back(make_robot(name, config));

  struct Combo {
    double gamma, alpha, beta;
  };
  std::vector<Combo> combos;
  for (double g : ranges.gamma)
    for (double a : ranges.alpha)
      for (double b : ranges.beta) combos.push_back({g, a, b});

  const std::size_t per_combo = robots.size() * config.seeds;
  // iou per (combo, robot, seed) and reward per (combo, robot, seed, eta)
  std::vector<double> ious(combos.size() * per_combo);
  std::vector<double> rewards(combos.size() * per_combo * ranges.eta.size());
  parallel_for(combos.size() * per_combo, config.jobs, [&](std::size_t i) {
    const auto& combo = combos[i / per_combo];
    const auto& robot = robots[(i % per_combo) / config.seeds];
    const std::uint64_t seed = config.seed + i % config.seeds;
    ExperimentConfig c = config;
    c.belief_params.gamma = combo.gamma;
    c.planner_params.alpha = combo.alpha;
    c.planner_params.beta = combo.beta;
    c.episodes_per_cell = 0;
    auto curve = run_seed(robot, seed, c, {Condition::belief}, ranges.score_t).front();
    if (!curve.ok) throw Error(ErrorCode::planning_failure, curve.diagnostic);
    ious[i] = curve.iou[ranges.score_t];
    const auto scenes = detail::episode_scenes(robot.truth, seed, config.episodes_per_cell);
    for (std::size_t e = 0; e < ranges.eta.size(); ++e) {
      HumanPolicyParams hp{ranges.eta[e]};
      rewards[i * ranges.eta.size() + e] =
          detail::mean_reward(scenes, robot.truth, hp, seed, ranges.score_t,
                              [&](std::size_t) -> const BeliefMap& { return curve.beliefs[ranges.score_t]; });
    }
  });

  GridSearchResult out{{}, 0};
  for (std::size_t k = 0; k < combos.size(); ++k) {
    for (std::size_t e = 0; e < ranges.eta.size(); ++e) {
      double score = 0.0, reward = 0.0;
      for (std::size_t j = 0; j < per_combo; ++j) {
        score += ious[k * per_combo + j];
        reward += rewards[(k * per_combo + j) * ranges.eta.size() + e];
      }
      score /= static_cast<double>(per_combo);
      reward /= static_cast<double>(per_combo);
      out.table.push_back({combos[k].gamma, combos[k].alpha, combos[k].beta, ranges.eta[e], score, reward});
      if (out.table[out.best].score < score) out.best = out.table.size() - 1;
    }
  }
  return out;
}

inline std::string grid_search_csv(const GridSearchResult& r) {
  std::string s = "gamma,alpha,beta,eta,score,mean_reward\r\n";
  for (const auto& c : r.table) {
    s += format_double(c.gamma) + "," + format_double(c.alpha) + "," + format_double(c.beta) + "," +
         format_double(c.eta) + "," + format_double(c.score) + "," + format_double(c.mean_reward) + "\r\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// session export

inline SessionBundle export_session(const std::string& robot_name, Condition condition,
                                    const ExperimentConfig& config, std::uint64_t seed, std::size_t T = 4) {
  if (T < 1) throw Error(ErrorCode::invalid_argument, "T must be >= 1");
  ExperimentConfig c = config;
  c.target_count = std::max(c.target_count, T);
  RobotSetup robot = make_robot(robot_name, c);
  const auto& truth = robot.truth;
  SessionBundle b{robot_name, robot.arm, std::string(to_string(condition)), seed, truth, c.belief_params,
                  c.planner_params, {}, {}, {}, {}, sample_scene(truth, derive_seed(seed, 0x5e55ULL)),
                  query_lattice(robot.arm)};

  BeliefMap belief = uniform_belief(truth.grid, c.belief_params);
  if (condition == Condition::random) {
    for (std::size_t t = 0; t < T; ++t) {
      auto traj = random_demo(robot.arm, truth, c.planner_params, c.belief_params, derive_seed(seed, 0x9a4d0ULL, 0, t));
      PlanResult pr;
      pr.trajectory = traj;
      PlannerParams smooth = c.planner_params;
      smooth.alpha = 0.0;
      pr.objective = cost_smoothness(traj, smooth);
      pr.converged = true;
      pr.trace = {pr.objective};
      pr.ik_branch = IkBranch::single;
      Point2 target = forward_kinematics(robot.arm, traj.back());
      b.demos.push_back({traj.front(), target, std::nullopt, std::nullopt, std::move(pr)});
      belief = update_belief(belief, robot.arm, traj, c.belief_params);
      b.beliefs.push_back(belief);
      b.d_trace.push_back(misalignment(belief, truth));
    }
    return b;
  }

  CalibrationProblem problem = calibration_problem(robot, c, seed, T);
  b.targets = problem.targets;
  CalibrationPlan plan = plan_calibration(problem, robot.arm, truth, belief);
  for (const auto& d : plan.demos) {
    PlanResult pr = condition == Condition::belief
                        ? d.plan
                        : plan_static(robot.arm, truth, d.start, d.target, c.belief_params, c.planner_params, {},
                                      pair_seed(seed, d.target_index, d.start_index));
    belief = update_belief(belief, robot.arm, pr.trajectory, c.belief_params);
    b.demos.push_back({d.start, d.target, d.start_index, d.target_index, std::move(pr)});
    b.beliefs.push_back(belief);
    b.d_trace.push_back(misalignment(belief, truth));
  }
  return b;
}

}  // namespace remp
