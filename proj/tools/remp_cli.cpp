#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "remp/study.hpp"

using namespace remp;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 0;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, path + ": " + e.what());
  }
}

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json_file(g.config_path));
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = g.jobs;
  if (!g.out.empty()) c.output_dir = g.out;
  return c;
}

/// Writes to --out when given, otherwise to stdout.
void emit(const Globals& g, const json& j) {
  if (g.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_file(g.out, j.dump(2) + "\n");
    std::cerr << "wrote " << g.out << "\n";
  }
}

Configuration to_config(const std::vector<double>& v) {
  Configuration q(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) q[static_cast<Eigen::Index>(i)] = v[i];
  return q;
}

BeliefMap initial_belief(const std::string& path, const ReachabilityMap& truth, const BeliefParams& bp) {
  if (path.empty()) return uniform_belief(truth.grid, bp);
  auto b = belief_from_json(read_json_file(path));
  if (!(b.grid() == truth.grid)) throw Error(ErrorCode::dimension_mismatch, "belief grid differs from the robot grid");
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability-expressive motion planning: planner, calibration, simulation and study service"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "experiment config JSON (see configs/default.json)");
  app.add_option("--seed", g.seed, "base seed (overrides the config)");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--jobs", g.jobs, "worker threads (overrides the config)");

  std::string robot = "A";
  std::string belief_path;

  auto* plan = app.add_subcommand("plan", "plan one trajectory and print it as JSON");
  std::vector<double> start, target;
  bool static_cost = false;
  plan->add_option("--robot", robot, "preset name")->capture_default_str();
  plan->add_option("--start", start, "start joint angles")->required()->delimiter(',');
  plan->add_option("--target", target, "target x,y")->required()->delimiter(',')->expected(2);
  plan->add_option("--belief", belief_path, "belief map JSON (default: uniform prior)");
  plan->add_flag("--static", static_cost, "drop the expressive term (alpha = 0)");

  auto* calibrate = app.add_subcommand("calibrate", "choose and plan a calibration sequence");
  std::size_t demos = 4;
  std::string mode = "greedy";
  bool permutations = false;
  calibrate->add_option("--robot", robot, "preset name")->capture_default_str();
  calibrate->add_option("--demos", demos, "number of demonstrations")->capture_default_str();
  calibrate->add_option("--mode", mode, "greedy or exhaustive")->check(CLI::IsMember({"greedy", "exhaustive"}))
      ->capture_default_str();
  calibrate->add_flag("--ordered", permutations, "exhaustive search over orderings");

  auto* simulate = app.add_subcommand("simulate", "play collaboration episodes against a belief");
  std::size_t episodes = 100, sim_demos = 0;
  bool transcripts = false;
  simulate->add_option("--robot", robot, "preset name")->capture_default_str();
  simulate->add_option("--belief", belief_path, "belief map JSON (default: uniform prior)");
  simulate->add_option("--demos", sim_demos, "calibrate with this many demos first (ignored with --belief)");
  simulate->add_option("--episodes", episodes, "episode count")->capture_default_str();
  simulate->add_flag("--transcripts", transcripts, "include every transcript");

  auto* experiment = app.add_subcommand("experiment", "run the condition sweep and write CSV and SVG");
  auto* search = app.add_subcommand("grid-search", "sweep the grid_search ranges of the config");

  auto* export_cmd = app.add_subcommand("export-session", "write a session bundle");
  std::string condition = "belief";
  std::size_t export_demos = 4;
  export_cmd->add_option("--robot", robot, "preset name")->capture_default_str();
  export_cmd->add_option("--condition", condition, "belief, static or random")->capture_default_str();
  export_cmd->add_option("--demos", export_demos, "number of demonstrations")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the study HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1", store_dir = "sessions", static_dir;
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--store-dir", store_dir, "session store directory")->capture_default_str();
  serve->add_option("--static-dir", static_dir, "serve the study UI build from this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      const auto c = load_config(g);
      const auto setup = make_robot(robot, c);
      if (target.size() != 2) throw Error(ErrorCode::invalid_argument, "--target needs x,y");
      auto pp = c.planner_params;
      if (static_cost) pp.alpha = 0.0;
      const auto belief = initial_belief(belief_path, setup.truth, c.belief_params);
      auto r = optimize_trajectory(setup.arm, belief, setup.truth, to_config(start), Point2(target[0], target[1]), pp,
                                   {}, c.seed);
      emit(g, to_json(r, setup.arm));
    } else if (calibrate->parsed()) {
      const auto c = load_config(g);
      const auto setup = make_robot(robot, c);
      ExperimentConfig sized = c;
      sized.target_count = std::max(c.target_count, demos);
      auto problem = calibration_problem(setup, sized, c.seed, demos);
      problem.mode = mode == "exhaustive" ? CalibrationMode::exhaustive : CalibrationMode::greedy;
      problem.permutations = permutations;
      auto result = plan_calibration(problem, setup.arm, setup.truth, uniform_belief(setup.truth.grid, c.belief_params));
      json j = to_json(result, setup.arm);
      j["iou"] = json::array();
      for (const auto& b : result.beliefs) j["iou"].push_back(iou(b, setup.truth, c.iou_threshold));
      emit(g, j);
    } else if (simulate->parsed()) {
      const auto c = load_config(g);
      const auto setup = make_robot(robot, c);
      BeliefMap belief = initial_belief(belief_path, setup.truth, c.belief_params);
      if (belief_path.empty() && sim_demos > 0) {
        ExperimentConfig sized = c;
        sized.target_count = std::max(c.target_count, sim_demos);
        auto problem = calibration_problem(setup, sized, c.seed, sim_demos);
        belief = plan_calibration(problem, setup.arm, setup.truth, belief).final_belief;
      }
      json list = json::array();
      std::vector<int> histogram(3, 0);
      double sum = 0.0;
      for (std::size_t e = 0; e < episodes; ++e) {
        const auto scene = sample_scene(setup.truth, derive_seed(c.seed, 0x5ce4eULL, e));
        auto ep = run_episode(scene, belief, setup.truth, c.human_params, derive_seed(c.seed, 0xe915ULL, e));
        sum += ep.reward;
        if (ep.reward >= 0 && ep.reward <= 2) ++histogram[static_cast<std::size_t>(ep.reward)];
        if (transcripts) list.push_back({{"scene", to_json(scene)}, {"transcript", to_json(ep.transcript)}});
      }
      json j = {{"robot", robot},
                {"episodes", episodes},
                {"iou", iou(belief, setup.truth, c.iou_threshold)},
                {"mean_reward", episodes ? sum / static_cast<double>(episodes) : 0.0},
                {"reward_histogram", histogram}};
      if (transcripts) j["transcripts"] = list;
      emit(g, j);
    } else if (experiment->parsed()) {
      const auto c = load_config(g);
      auto result = run_experiment(c);
      write_experiment_outputs(result, c.output_dir);
      std::cerr << "wrote " << result.rows.size() << " rows to " << c.output_dir << "\n";
      for (const auto& f : result.failures) std::cerr << "cell failed: " << f << "\n";
      return result.failures.empty() ? 0 : 2;
    } else if (search->parsed()) {
      const auto c = load_config(g);
      auto r = grid_search(c);
      ensure_dir(c.output_dir);
      write_file(std::filesystem::path(c.output_dir) / "grid_search.csv", grid_search_csv(r));
      const auto& best = r.table[r.best];
      std::cout << json{{"gamma", best.gamma}, {"alpha", best.alpha}, {"beta", best.beta}, {"eta", best.eta},
                        {"score", best.score}, {"mean_reward", best.mean_reward}}
                       .dump(2)
                << "\n";
    } else if (export_cmd->parsed()) {
      const auto c = load_config(g);
      auto bundle = export_session(robot, condition_from_string(condition), c, c.seed, export_demos);
      emit(g, to_json(bundle));
    } else if (serve->parsed()) {
      StudyConfig sc;
      sc.store_dir = store_dir;
      sc.experiment = load_config(g);
      StudyService service(sc);
      httplib::Server server;
      register_routes(server, service, static_dir);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw Error(ErrorCode::io_error, "cannot listen on port " + std::to_string(port));
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
