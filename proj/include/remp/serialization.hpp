#pragma once

#include <json.hpp>

#include "remp/calibration.hpp"
#include "remp/collab.hpp"

namespace remp {

using json = nlohmann::json;

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace detail

inline json point_to_json(const Point2& p) { return json::array({p.x(), p.y()}); }

inline Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::invalid_argument, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json config_to_json(const Configuration& q) {
  json a = json::array();
  for (Eigen::Index i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

inline Configuration config_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::invalid_argument, "configuration must be an array");
  Configuration q(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) q[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return q;
}

// ---------------------------------------------------------------------------
// arm and grid

inline json to_json(const ArmModel& arm) {
  json limits = json::array();
  for (const auto& l : arm.joint_limits()) limits.push_back({l.lo, l.hi});
  return {{"link_lengths", arm.link_lengths()},
          {"joint_limits", limits},
          {"base_position", point_to_json(arm.base_position())}};
}

inline ArmModel arm_from_json(const json& j) {
  auto lengths = j.at("link_lengths").get<std::vector<double>>();
  std::vector<Interval> limits;
  if (j.contains("joint_limits")) {
    for (const auto& l : j.at("joint_limits")) limits.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
  } else {
    limits.assign(lengths.size(), Interval{-kPi, kPi});
  }
  Point2 base = j.contains("base_position") ? point_from_json(j.at("base_position")) : Point2::Zero();
  return ArmModel(std::move(lengths), std::move(limits), base);
}

/// Either a preset name ("A", "B") or an inline arm object.
inline ArmModel arm_from_spec(const json& j) {
  if (j.is_string()) return preset(j.get<std::string>());
  return arm_from_json(j);
}

inline json to_json(const WorkspaceGrid& g) {
  return {{"x_range", {g.x_range().lo, g.x_range().hi}},
          {"y_range", {g.y_range().lo, g.y_range().hi}},
          {"nx", g.nx()},
          {"ny", g.ny()}};
}

inline WorkspaceGrid grid_from_json(const json& j) {
  return WorkspaceGrid({j.at("x_range").at(0).get<double>(), j.at("x_range").at(1).get<double>()},
                       {j.at("y_range").at(0).get<double>(), j.at("y_range").at(1).get<double>()},
                       j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>());
}

inline json to_json(const ReachabilityMap& m) {
  return {{"grid", to_json(m.grid)}, {"reachable", m.reachable}};
}

inline json to_json(const BeliefMap& b) {
  return {{"grid", to_json(b.grid())}, {"delta", b.delta()}, {"belief", b.values()}};
}

inline BeliefMap belief_from_json(const json& j) {
  return BeliefMap(grid_from_json(j.at("grid")), j.at("belief").get<std::vector<double>>(), j.at("delta").get<double>());
}

// ---------------------------------------------------------------------------
// parameters

inline json to_json(const BeliefParams& p) { return {{"gamma", p.gamma}, {"delta", p.delta}, {"b0", p.b0}}; }

inline BeliefParams belief_params_from_json(const json& j, BeliefParams p = {}) {
  detail::read_opt(j, "gamma", p.gamma);
  detail::read_opt(j, "delta", p.delta);
  detail::read_opt(j, "b0", p.b0);
  p.validate();
  return p;
}

inline json to_json(const PlannerParams& p) {
  return {{"alpha", p.alpha},
          {"beta", p.beta},
          {"lambda", p.lambda},
          {"n_waypoints", p.n_waypoints},
          {"max_iters", p.max_iters},
          {"step_init", p.step_init},
          {"armijo_factor", p.armijo_factor},
          {"tol_rel", p.tol_rel},
          {"n_restarts", p.n_restarts},
          {"obstacle_penalty_weight", p.obstacle_penalty_weight},
          {"restart_amplitude", p.restart_amplitude}};
}

inline PlannerParams planner_params_from_json(const json& j, PlannerParams p = {}) {
  detail::read_opt(j, "alpha", p.alpha);
  detail::read_opt(j, "beta", p.beta);
  detail::read_opt(j, "lambda", p.lambda);
  detail::read_opt(j, "n_waypoints", p.n_waypoints);
  detail::read_opt(j, "max_iters", p.max_iters);
  detail::read_opt(j, "step_init", p.step_init);
  detail::read_opt(j, "armijo_factor", p.armijo_factor);
  detail::read_opt(j, "tol_rel", p.tol_rel);
  detail::read_opt(j, "n_restarts", p.n_restarts);
  detail::read_opt(j, "obstacle_penalty_weight", p.obstacle_penalty_weight);
  detail::read_opt(j, "restart_amplitude", p.restart_amplitude);
  p.validate();
  return p;
}

inline json to_json(const HumanPolicyParams& p) { return {{"eta", p.eta}}; }

inline HumanPolicyParams human_params_from_json(const json& j, HumanPolicyParams p = {}) {
  detail::read_opt(j, "eta", p.eta);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// trajectories

inline IkBranch ik_branch_from_string(std::string_view s) {
  if (s == "elbow_up") return IkBranch::elbow_up;
  if (s == "elbow_down") return IkBranch::elbow_down;
  if (s == "single") return IkBranch::single;
  if (s == "numeric") return IkBranch::numeric;
  throw Error(ErrorCode::invalid_argument, "unknown IK branch '" + std::string(s) + "'");
}

inline json trajectory_to_json(const Trajectory& t, const ArmModel& arm) {
  json wp = json::array(), ee = json::array();
  for (const auto& q : t.waypoints) {
    wp.push_back(config_to_json(q));
    ee.push_back(point_to_json(forward_kinematics(arm, q)));
  }
  return {{"waypoints", wp}, {"ee_path", ee}};
}

inline Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  for (const auto& q : j.at("waypoints")) t.waypoints.push_back(config_from_json(q));
  return t;
}

/// Waypoints, derived end-effector path, objective and the per-iteration
/// objective trace.
inline json to_json(const PlanResult& r, const ArmModel& arm) {
  json j = trajectory_to_json(r.trajectory, arm);
  j["objective"] = r.objective;
  j["converged"] = r.converged;
  j["restarts_used"] = r.restarts_used;
  j["ik_branch"] = std::string(to_string(r.ik_branch));
  j["iterations"] = r.iterations;
  j["trace"] = r.trace;
  return j;
}

inline PlanResult plan_result_from_json(const json& j) {
  PlanResult r;
  r.trajectory = trajectory_from_json(j);
  r.objective = j.at("objective").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.restarts_used = j.at("restarts_used").get<std::size_t>();
  r.ik_branch = ik_branch_from_string(j.at("ik_branch").get<std::string>());
  r.iterations = j.at("iterations").get<std::size_t>();
  r.trace = j.at("trace").get<std::vector<double>>();
  return r;
}

inline constexpr std::size_t kFramesPerDemo = 30;

/// Joint angles and end-effector position at evenly spaced frames.
inline json demo_frames(const Trajectory& t, const ArmModel& arm, std::size_t frames = kFramesPerDemo) {
  json out = json::array();
  for (const auto& q : resample(t, frames).waypoints) {
    out.push_back({{"q", config_to_json(q)}, {"ee", point_to_json(forward_kinematics(arm, q))}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// collaboration

inline json to_json(const TableScene& s, bool include_reachability = true) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    json jo = {{"id", o.id}, {"position", point_to_json(o.position)}};
    if (include_reachability) jo["robot_reachable"] = o.robot_reachable;
    objs.push_back(jo);
  }
  return {{"objects", objs}};
}

inline TableScene scene_from_json(const json& j) {
  TableScene s;
  for (const auto& o : j.at("objects")) {
    s.objects.push_back({o.at("id").get<std::size_t>(), point_from_json(o.at("position")),
                         o.value("robot_reachable", false)});
  }
  return s;
}

inline Collector collector_from_string(std::string_view s) {
  if (s == "human") return Collector::human;
  if (s == "robot") return Collector::robot;
  if (s == "none") return Collector::none;
  throw Error(ErrorCode::invalid_argument, "unknown collector '" + std::string(s) + "'");
}

inline json to_json(const GameState& g) {
  json by = json::array();
  json remaining = json::array();
  for (std::size_t i = 0; i < g.collected_by.size(); ++i) {
    by.push_back(std::string(to_string(g.collected_by[i])));
    if (g.collected_by[i] == Collector::none) remaining.push_back(i);
  }
  return {{"collected_by", by}, {"remaining", remaining}, {"round", g.round}, {"reward", g.reward}, {"over", g.over()}};
}

inline GameState game_from_json(const json& j) {
  GameState g;
  for (const auto& c : j.at("collected_by")) g.collected_by.push_back(collector_from_string(c.get<std::string>()));
  g.round = j.at("round").get<std::size_t>();
  g.reward = j.at("reward").get<int>();
  return g;
}

inline json to_json(const RoundRecord& r) {
  return {{"round", r.round},
          {"human", r.human},
          {"robot", r.robot ? json(*r.robot) : json(nullptr)},
          {"reward", r.reward}};
}

inline RoundRecord round_from_json(const json& j) {
  RoundRecord r{j.at("round").get<std::size_t>(), j.at("human").get<std::size_t>(), std::nullopt,
                j.at("reward").get<int>()};
  if (!j.at("robot").is_null()) r.robot = j.at("robot").get<std::size_t>();
  return r;
}

inline json to_json(const Transcript& t) {
  json rounds = json::array();
  json trace = json::array();
  for (const auto& r : t.rounds) {
    rounds.push_back(to_json(r));
    trace.push_back(r.reward);
  }
  return {{"object_beliefs", t.object_beliefs}, {"rounds", rounds}, {"reward_trace", trace},
          {"final_reward", t.final_reward}};
}

inline Transcript transcript_from_json(const json& j) {
  Transcript t;
  t.object_beliefs = j.at("object_beliefs").get<std::vector<double>>();
  for (const auto& r : j.at("rounds")) t.rounds.push_back(round_from_json(r));
  t.final_reward = j.at("final_reward").get<int>();
  return t;
}

inline json to_json(const CalibrationPlan& plan, const ArmModel& arm) {
  json demos = json::array();
  for (const auto& d : plan.demos) {
    demos.push_back({{"start_index", d.start_index},
                     {"target_index", d.target_index},
                     {"start", config_to_json(d.start)},
                     {"target", point_to_json(d.target)},
                     {"trajectory", to_json(d.plan, arm)}});
  }
  return {{"demos", demos},
          {"d_trace", plan.d_trace},
          {"final_misalignment", plan.final_misalignment},
          {"branches_explored", plan.branches_explored},
          {"final_belief", to_json(plan.final_belief)}};
}

// ---------------------------------------------------------------------------
// session bundle

struct BundleDemo {
  Configuration start;
  Point2 target;
  std::optional<std::size_t> start_index;   // index into the start set (planned conditions)
  std::optional<std::size_t> target_index;  // index into the target set (planned conditions)
  PlanResult plan;
};

/// Everything a calibration-then-collaboration session needs: the arm, its
/// true reachability, the demonstrations with the observer belief after
/// each, a table scene and the reachability query lattice.
struct SessionBundle {
  std::string robot;
  ArmModel arm;
  std::string condition;
  std::uint64_t seed = 0;
  ReachabilityMap truth;
  BeliefParams belief_params;
  PlannerParams planner_params;
  std::vector<Point2> targets;
  std::vector<BundleDemo> demos;
  std::vector<BeliefMap> beliefs;
  std::vector<double> d_trace;
  TableScene scene;
  std::vector<Point2> queries;
};

inline json to_json(const SessionBundle& b) {
  json demos = json::array();
  for (const auto& d : b.demos) {
    json jd = {{"start", config_to_json(d.start)},
               {"target", point_to_json(d.target)},
               {"start_index", d.start_index ? json(*d.start_index) : json(nullptr)},
               {"target_index", d.target_index ? json(*d.target_index) : json(nullptr)},
               {"trajectory", to_json(d.plan, b.arm)},
               {"frames", demo_frames(d.plan.trajectory, b.arm)}};
    demos.push_back(std::move(jd));
  }
  json beliefs = json::array();
  for (const auto& bm : b.beliefs) beliefs.push_back(to_json(bm));
  json targets = json::array();
  for (const auto& t : b.targets) targets.push_back(point_to_json(t));
  json queries = json::array();
  for (std::size_t i = 0; i < b.queries.size(); ++i) {
    queries.push_back({{"index", i},
                       {"position", point_to_json(b.queries[i])},
                       {"reachable", b.truth.reachable_at(b.queries[i])}});
  }
  return {{"format", "remp-session-bundle"},
          {"version", 1},
          {"robot", b.robot},
          {"arm", to_json(b.arm)},
          {"condition", b.condition},
          {"seed", b.seed},
          {"truth", to_json(b.truth)},
          {"belief_params", to_json(b.belief_params)},
          {"planner_params", to_json(b.planner_params)},
          {"targets", targets},
          {"demos", demos},
          {"belief_snapshots", beliefs},
          {"d_trace", b.d_trace},
          {"scene", to_json(b.scene)},
          {"query_lattice", queries}};
}

inline SessionBundle bundle_from_json(const json& j) {
  if (j.value("format", "") != "remp-session-bundle") {
    throw Error(ErrorCode::invalid_argument, "not a session bundle");
  }
  ArmModel arm = arm_from_json(j.at("arm"));
  WorkspaceGrid grid = grid_from_json(j.at("truth").at("grid"));
  ReachabilityMap truth{grid, j.at("truth").at("reachable").get<std::vector<std::uint8_t>>(),
                        std::vector<std::optional<Point2>>(grid.size())};
  if (truth.reachable.size() != grid.size()) throw Error(ErrorCode::dimension_mismatch, "truth size != grid size");
  SessionBundle b{j.at("robot").get<std::string>(),
                  arm,
                  j.at("condition").get<std::string>(),
                  j.at("seed").get<std::uint64_t>(),
                  std::move(truth),
                  belief_params_from_json(j.at("belief_params")),
                  planner_params_from_json(j.at("planner_params")),
                  {},
                  {},
                  {},
                  j.at("d_trace").get<std::vector<double>>(),
                  scene_from_json(j.at("scene")),
                  {}};
  for (const auto& t : j.at("targets")) b.targets.push_back(point_from_json(t));
  for (const auto& d : j.at("demos")) {
    BundleDemo demo{config_from_json(d.at("start")), point_from_json(d.at("target")), std::nullopt, std::nullopt,
                    plan_result_from_json(d.at("trajectory"))};
    if (!d.at("start_index").is_null()) demo.start_index = d.at("start_index").get<std::size_t>();
    if (!d.at("target_index").is_null()) demo.target_index = d.at("target_index").get<std::size_t>();
    b.demos.push_back(std::move(demo));
  }
  for (const auto& bm : j.at("belief_snapshots")) b.beliefs.push_back(belief_from_json(bm));
  for (const auto& q : j.at("query_lattice")) b.queries.push_back(point_from_json(q.at("position")));
  return b;
}

}  // namespace remp
