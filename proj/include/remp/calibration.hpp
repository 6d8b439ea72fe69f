#pragma once

#include <limits>
#include <vector>

#include "remp/planner.hpp"

namespace remp {

enum class CalibrationMode { exhaustive, greedy };

inline std::string_view to_string(CalibrationMode m) { return m == CalibrationMode::exhaustive ? "exhaustive" : "greedy"; }

struct CalibrationProblem {
  std::vector<Point2> targets;         // candidate targets G
  std::size_t demo_count = 4;          // K
  std::vector<Configuration> starts;   // candidate start configurations
  BeliefParams belief_params;
  PlannerParams planner_params;
  CalibrationMode mode = CalibrationMode::greedy;
  bool permutations = false;           // exhaustive: expand orderings, not only combinations
  std::uint64_t seed = 0;
  std::size_t max_branches = 10000;
};

struct Demonstration {
  std::size_t start_index;
  std::size_t target_index;
  Configuration start;
  Point2 target;
  PlanResult plan;
  std::uint64_t belief_checksum;  // checksum of the belief the demo was planned against
};

struct CalibrationPlan {
  std::vector<Demonstration> demos;
  std::vector<BeliefMap> beliefs;   // belief after each demo
  std::vector<double> d_trace;      // misalignment after each demo
  BeliefMap final_belief;
  double final_misalignment;
  std::size_t branches_explored;
};

/// Seed used for the plan of one (target, start) pair; fixed per pair so that
/// a rollout depends only on the belief it is planned against.
inline std::uint64_t pair_seed(std::uint64_t seed, std::size_t target_index, std::size_t start_index) {
  return derive_seed(seed, 0x7a11ULL, target_index, start_index);
}

inline void validate(const CalibrationProblem& p, const ArmModel& arm) {
  p.belief_params.validate();
  p.planner_params.validate();
  if (p.starts.empty()) throw Error(ErrorCode::invalid_argument, "start set is empty");
  if (p.demo_count == 0 || p.demo_count > p.targets.size()) {
    throw Error(ErrorCode::invalid_argument, "demo count must be in [1, |targets|]");
  }
  for (const auto& s : p.starts) {
    arm.check_dims(s);
    if (!arm.within_limits(s, 1e-9)) throw Error(ErrorCode::invalid_argument, "start violates joint limits");
  }
  for (const auto& t : p.targets) {
    if (detail::goal_configurations(arm, p.starts.front(), t).empty()) {
      throw Error(ErrorCode::unreachable_target, "target (" + std::to_string(t.x()) + ", " +
                                                     std::to_string(t.y()) + ") is not reachable");
    }
  }
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

namespace detail {

struct StepChoice {
  RempStepResult step;
  std::size_t start_index;
  double misalignment;
};

// Best start for one target: the start whose demo leaves the lowest misalignment.
inline StepChoice best_start(const CalibrationProblem& p, const ArmModel& arm, const ReachabilityMap& truth,
                             const BeliefMap& belief, std::size_t target_index) {
  std::optional<StepChoice> best;
  for (std::size_t s = 0; s < p.starts.size(); ++s) {
    auto step = remp_step(arm, belief, truth, p.starts[s], p.targets[target_index], p.belief_params,
                          p.planner_params, {}, pair_seed(p.seed, target_index, s));
    const double d = misalignment(step.belief, truth);
    if (!best || d < best->misalignment) best = StepChoice{std::move(step), s, d};
  }
  return std::move(*best);
}

inline Demonstration make_demo(const CalibrationProblem& p, std::size_t target_index, StepChoice& c,
                               const BeliefMap& before) {
  return Demonstration{c.start_index, target_index, p.starts[c.start_index], p.targets[target_index],
                       std::move(c.step.plan), before.checksum()};
}

// Visits index tuples in canonical order: combinations in lexicographic
// order, or every ordering of each combination when `permutations` is set.
template <typename Visit>
void for_each_branch(std::size_t n, std::size_t k, bool permutations, Visit&& visit) {
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  while (true) {
    if (permutations) {
      auto perm = comb;
      do {
        visit(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      visit(comb);
    }
    std::size_t i = k;
    while (i-- > 0) {
      if (comb[i] != i + n - k) break;
    }
    if (i == static_cast<std::size_t>(-1)) return;
    ++comb[i];
    for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
}

}  // namespace detail

/// Chooses K demonstrations that minimize the final misalignment between
/// the simulated observer and the true reachability map.
///
/// Exhaustive mode enumerates target combinations (taken in index order)
/// and picks each start greedily; the lowest final misalignment wins, with
/// the first-enumerated branch kept on ties. Greedy mode picks, at every
/// step, the (target, start) pair whose demo leaves the lowest misalignment.
inline CalibrationPlan plan_calibration(const CalibrationProblem& problem, const ArmModel& arm,
                                        const ReachabilityMap& truth, const BeliefMap& initial_belief) {
  validate(problem, arm);
  require_same_grid(initial_belief.grid(), truth.grid);
  const std::size_t n = problem.targets.size();
  const std::size_t k = problem.demo_count;

  if (problem.mode == CalibrationMode::greedy) {
    CalibrationPlan plan{{}, {}, {}, initial_belief, misalignment(initial_belief, truth), 1};
    std::vector<bool> used(n, false);
    BeliefMap belief = initial_belief;
    for (std::size_t t = 0; t < k; ++t) {
      std::optional<detail::StepChoice> best;
      std::size_t best_target = 0;
      for (std::size_t g = 0; g < n; ++g) {
        if (used[g]) continue;
        auto c = detail::best_start(problem, arm, truth, belief, g);
        if (!best || c.misalignment < best->misalignment) {
          best = std::move(c);
          best_target = g;
        }
      }
      used[best_target] = true;
      plan.demos.push_back(detail::make_demo(problem, best_target, *best, belief));
      belief = std::move(best->step.belief);
      plan.beliefs.push_back(belief);
      plan.d_trace.push_back(best->misalignment);
    }
    plan.final_misalignment = plan.d_trace.back();
    plan.final_belief = std::move(belief);
    return plan;
  }

  double branches = binomial(n, k);
  if (problem.permutations) {
    for (std::size_t i = 2; i <= k; ++i) branches *= static_cast<double>(i);
  }
  if (branches > static_cast<double>(problem.max_branches)) {
    throw Error(ErrorCode::invalid_argument, "exhaustive search would explore " + std::to_string(branches) +
                                                 " branches; use greedy mode");
  }

  std::optional<CalibrationPlan> best;
  std::size_t explored = 0;
  detail::for_each_branch(n, k, problem.permutations, [&](const std::vector<std::size_t>& order) {
    ++explored;
    CalibrationPlan branch{{}, {}, {}, initial_belief, 0.0, 0};
    BeliefMap belief = initial_belief;
    for (std::size_t target : order) {
      auto c = detail::best_start(problem, arm, truth, belief, target);
      branch.demos.push_back(detail::make_demo(problem, target, c, belief));
      belief = std::move(c.step.belief);
      branch.beliefs.push_back(belief);
      branch.d_trace.push_back(c.misalignment);
    }
    branch.final_misalignment = misalignment(belief, truth);
    branch.final_belief = std::move(belief);
    if (!best || branch.final_misalignment < best->final_misalignment) best = std::move(branch);
  });
  best->branches_explored = explored;
  return std::move(*best);
}

/// Farthest-point sampling over reachable cells: the first pick is a seeded
/// random reachable cell, every later pick maximizes its distance to the
/// points chosen so far. Returned points are the sampled end-effector
/// positions that witnessed each cell, so each is exactly reachable.
inline std::vector<Point2> default_targets(const ReachabilityMap& truth, std::size_t count, std::uint64_t seed) {
  auto cells = truth.reachable_cells();
  if (count > cells.size()) throw Error(ErrorCode::invalid_argument, "more targets requested than reachable cells");
  std::vector<Point2> pts;
  pts.reserve(cells.size());
  for (auto c : cells) pts.push_back(truth.witness[c].value_or(truth.grid.center(c)));

  std::vector<Point2> out;
  if (count == 0) return out;
  Rng rng(derive_seed(seed, 0x7a26ULL));
  std::size_t pick = uniform_index(rng, pts.size());
  std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
  for (std::size_t n = 0; n < count; ++n) {
    out.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = std::min(dist[i], (pts[i] - pts[pick]).squaredNorm());
    pick = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  }
  return out;
}

/// Uniformly random configurations inside the joint limits.
inline std::vector<Configuration> random_configurations(const ArmModel& arm, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x57a7ULL));
  std::vector<Configuration> out;
  for (std::size_t n = 0; n < count; ++n) {
    Configuration q(static_cast<Eigen::Index>(arm.dof()));
    for (std::size_t j = 0; j < arm.dof(); ++j) {
      q[static_cast<Eigen::Index>(j)] = uniform(rng, arm.joint_limits()[j].lo, arm.joint_limits()[j].hi);
    }
    out.push_back(std::move(q));
  }
  return out;
}

/// side x side query points on a square lattice spanning the arm's maximum
/// reach around its base (6 x 6 = 36 for the 2-link presets).
inline std::vector<Point2> query_lattice(const ArmModel& arm, std::size_t side = 6) {
  if (side < 2) throw Error(ErrorCode::invalid_argument, "lattice side must be >= 2");
  const double r = arm.max_reach();
  std::vector<Point2> out;
  for (std::size_t iy = 0; iy < side; ++iy) {
    for (std::size_t ix = 0; ix < side; ++ix) {
      const double u = -r + 2.0 * r * static_cast<double>(ix) / static_cast<double>(side - 1);
      const double v = -r + 2.0 * r * static_cast<double>(iy) / static_cast<double>(side - 1);
      out.push_back(arm.base_position() + Point2(u, v));
    }
  }
  return out;
}

}  // namespace remp
