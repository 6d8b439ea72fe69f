#pragma once

#include <optional>
#include <vector>

#include "remp/planner.hpp"

namespace remp {

struct SceneObject {
  std::size_t id;
  Point2 position;
  bool robot_reachable;
};

/// Objects on the table. Default scenes hold four objects, two of them
/// inside the robot's reach.
struct TableScene {
  std::vector<SceneObject> objects;

  std::size_t size() const { return objects.size(); }
  std::size_t reachable_count() const {
    std::size_t n = 0;
    for (const auto& o : objects) n += o.robot_reachable;
    return n;
  }
};

enum class Collector { none, human, robot };

inline std::string_view to_string(Collector c) {
  switch (c) {
    case Collector::none: return "none";
    case Collector::human: return "human";
    case Collector::robot: return "robot";
  }
  return "none";
}

/// Turn-taking table-clearing state. Every round the human picks first and
/// the robot answers; reward = objects collected - rounds started.
struct GameState {
  std::vector<Collector> collected_by;
  std::size_t round = 0;
  int reward = 0;

  explicit GameState(std::size_t object_count = 0) : collected_by(object_count, Collector::none) {}

  std::size_t collected() const {
    std::size_t n = 0;
    for (auto c : collected_by) n += (c != Collector::none);
    return n;
  }
  bool remaining(std::size_t id) const { return id < collected_by.size() && collected_by[id] == Collector::none; }
  std::vector<std::size_t> remaining_ids() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < collected_by.size(); ++i) {
      if (collected_by[i] == Collector::none) out.push_back(i);
    }
    return out;
  }
  bool over() const { return collected() == collected_by.size(); }

  friend bool operator==(const GameState&, const GameState&) = default;
};

/// Starts a new round with the human's pick.
inline void apply_human_pick(GameState& state, std::size_t id) {
  if (id >= state.collected_by.size()) throw Error(ErrorCode::out_of_bounds, "unknown object id");
  if (!state.remaining(id)) throw Error(ErrorCode::conflict, "object already collected");
  ++state.round;
  state.collected_by[id] = Collector::human;
  state.reward = static_cast<int>(state.collected()) - static_cast<int>(state.round);
}

/// Completes the current round; nullopt means the robot stayed idle.
inline void apply_robot_pick(GameState& state, std::optional<std::size_t> id) {
  if (!id) return;
  if (!state.remaining(*id)) throw Error(ErrorCode::conflict, "object already collected");
  state.collected_by[*id] = Collector::robot;
  state.reward = static_cast<int>(state.collected()) - static_cast<int>(state.round);
}

struct HumanPolicyParams {
  double eta = 5.0;  // Boltzmann rationality

  void validate() const {
    if (!(eta >= 0.0)) throw Error(ErrorCode::invalid_argument, "eta must be >= 0");
  }
};

/// Two objects on reachable cells and two on unreachable cells, placed at
/// uniformly drawn distinct cell centers; ids are shuffled.
inline TableScene sample_scene(const ReachabilityMap& truth, std::uint64_t seed, std::size_t reachable_objects = 2,
                               std::size_t unreachable_objects = 2) {
  auto reach = truth.reachable_cells();
  auto unreach = truth.unreachable_cells();
  if (reach.size() < reachable_objects || unreach.size() < unreachable_objects) {
    throw Error(ErrorCode::invalid_argument, "not enough reachable/unreachable cells for a scene");
  }
  Rng rng(derive_seed(seed, 0x5ce4eULL));
  auto draw = [&rng](std::vector<std::size_t>& pool, std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t j = k + uniform_index(rng, pool.size() - k);
      std::swap(pool[k], pool[j]);
      out.push_back(pool[k]);
    }
    return out;
  };
  std::vector<std::pair<std::size_t, bool>> cells;
  for (auto c : draw(reach, reachable_objects)) cells.emplace_back(c, true);
  for (auto c : draw(unreach, unreachable_objects)) cells.emplace_back(c, false);
  for (std::size_t k = cells.size(); k > 1; --k) std::swap(cells[k - 1], cells[uniform_index(rng, k)]);

  TableScene scene;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    scene.objects.push_back({i, truth.grid.center(cells[i].first), cells[i].second});
  }
  return scene;
}

/// Boltzmann choice probabilities over the remaining objects (zero for
/// collected ones): P(o) proportional to exp(eta * (1 - b(o))).
inline std::vector<double> human_pick_probabilities(const GameState& state, const TableScene& scene,
                                                    const BeliefMap& belief, const HumanPolicyParams& params) {
  params.validate();
  auto ids = state.remaining_ids();
  std::vector<double> p(scene.size(), 0.0);
  if (ids.empty()) return p;
  std::vector<double> util;
  for (auto id : ids) util.push_back(1.0 - belief.lookup(scene.objects[id].position));
  const double top = *std::max_element(util.begin(), util.end());
  if (std::isinf(params.eta)) {
    std::size_t ties = 0;
    for (double u : util) ties += (u == top);
    for (std::size_t k = 0; k < ids.size(); ++k) p[ids[k]] = util[k] == top ? 1.0 / static_cast<double>(ties) : 0.0;
    return p;
  }
  double z = 0.0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    p[ids[k]] = std::exp(params.eta * (util[k] - top));
    z += p[ids[k]];
  }
  for (auto id : ids) p[id] /= z;
  return p;
}

inline std::size_t human_pick(const GameState& state, const TableScene& scene, const BeliefMap& belief,
                              const HumanPolicyParams& params, Rng& rng) {
  auto p = human_pick_probabilities(state, scene, belief, params);
  auto ids = state.remaining_ids();
  if (ids.empty()) throw Error(ErrorCode::invalid_argument, "no objects remain");
  double u = uniform(rng, 0.0, 1.0);
  for (auto id : ids) {
    if (u < p[id]) return id;
    u -= p[id];
  }
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    if (p[*it] > 0.0) return *it;
  }
  return ids.back();
}

inline std::size_t human_pick(const GameState& state, const TableScene& scene, const BeliefMap& belief,
                              const HumanPolicyParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return human_pick(state, scene, belief, params, rng);
}

/// Uniform over remaining objects the robot can actually reach.
inline std::optional<std::size_t> robot_pick(const GameState& state, const TableScene& scene,
                                             const ReachabilityMap& truth, Rng& rng) {
  std::vector<std::size_t> options;
  for (auto id : state.remaining_ids()) {
    if (truth.reachable_at(scene.objects[id].position)) options.push_back(id);
  }
  if (options.empty()) return std::nullopt;
  return options[uniform_index(rng, options.size())];
}

inline std::optional<std::size_t> robot_pick(const GameState& state, const TableScene& scene,
                                             const ReachabilityMap& truth, std::uint64_t seed) {
  Rng rng(seed);
  return robot_pick(state, scene, truth, rng);
}

struct RoundRecord {
  std::size_t round;
  std::size_t human;
  std::optional<std::size_t> robot;
  int reward;  // running reward after the round
};

struct Transcript {
  std::vector<double> object_beliefs;  // observer belief at each object position
  std::vector<RoundRecord> rounds;
  int final_reward = 0;
};

struct EpisodeResult {
  int reward;
  Transcript transcript;
};

inline EpisodeResult run_episode(const TableScene& scene, const BeliefMap& belief, const ReachabilityMap& truth,
                                 const HumanPolicyParams& params, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xe915ULL));
  GameState state(scene.size());
  Transcript tr;
  for (const auto& o : scene.objects) tr.object_beliefs.push_back(belief.lookup(o.position));
  while (!state.over()) {
    const std::size_t h = human_pick(state, scene, belief, params, rng);
    apply_human_pick(state, h);
    std::optional<std::size_t> r;
    if (!state.over()) {
      r = robot_pick(state, scene, truth, rng);
      apply_robot_pick(state, r);
    }
    tr.rounds.push_back({state.round, h, r, state.reward});
  }
  tr.final_reward = state.reward;
  return {state.reward, std::move(tr)};
}

/// Replays a transcript through the game rules and returns the final state.
inline GameState replay(const TableScene& scene, const Transcript& tr) {
  GameState state(scene.size());
  for (const auto& r : tr.rounds) {
    apply_human_pick(state, r.human);
    apply_robot_pick(state, r.robot);
  }
  return state;
}

/// Random demonstration: a uniformly chosen reachable cell as the target, a
/// uniformly random start inside the joint limits, and the smoothness-only
/// trajectory between them.
inline Trajectory random_demo(const ArmModel& arm, const ReachabilityMap& truth, const PlannerParams& planner_params,
                              const BeliefParams& belief_params, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x4a9d0ULL));
  auto cells = truth.reachable_cells();
  if (cells.empty()) throw Error(ErrorCode::invalid_argument, "no reachable cells");
  const std::size_t c = cells[uniform_index(rng, cells.size())];
  const Point2 target = truth.witness[c].value_or(truth.grid.center(c));
  Configuration start(static_cast<Eigen::Index>(arm.dof()));
  for (std::size_t j = 0; j < arm.dof(); ++j) {
    start[static_cast<Eigen::Index>(j)] = uniform(rng, arm.joint_limits()[j].lo, arm.joint_limits()[j].hi);
  }
  PlannerParams p = planner_params;
  p.alpha = 0.0;
  p.n_restarts = 0;  // the straight line is the optimum without the expressive term
  return plan_static(arm, truth, start, target, belief_params, p, {}, seed).trajectory;
}

}  // namespace remp
