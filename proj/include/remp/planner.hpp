#pragma once

#include <vector>

#include "remp/belief.hpp"

namespace remp {

struct PlannerParams {
  double alpha = 1.0;   // expressiveness weight
  double beta = 5.0;    // alignment sharpness
  double lambda = 10.0; // smoothness cost is (1/lambda) * sum of squared steps
  std::size_t n_waypoints = 20;
  std::size_t max_iters = 2000;
  double step_init = 0.1;
  double armijo_factor = 0.5;
  double tol_rel = 1e-6;
  std::size_t n_restarts = 4;
  double obstacle_penalty_weight = 100.0;
  double restart_amplitude = 1.5;  // rad, peak of the bump added to restart initializations

  void validate() const {
    if (!(alpha >= 0.0)) throw Error(ErrorCode::invalid_argument, "alpha must be >= 0");
    if (!(beta > 0.0)) throw Error(ErrorCode::invalid_argument, "beta must be > 0");
    if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be > 0");
    if (n_waypoints < 3) throw Error(ErrorCode::invalid_argument, "n_waypoints must be >= 3");
    if (!(tol_rel > 0.0)) throw Error(ErrorCode::invalid_argument, "tol_rel must be > 0");
    if (!(step_init > 0.0)) throw Error(ErrorCode::invalid_argument, "step_init must be > 0");
    if (!(armijo_factor > 0.0 && armijo_factor < 1.0)) {
      throw Error(ErrorCode::invalid_argument, "armijo_factor must be in (0, 1)");
    }
  }
};

struct Obstacle {
  Point2 center;
  double radius;
};

struct PlanResult {
  Trajectory trajectory;
  double objective = 0.0;
  bool converged = false;
  std::size_t restarts_used = 0;  // restart index that produced the result (0: straight-line init)
  IkBranch ik_branch = IkBranch::single;
  std::size_t iterations = 0;
  std::vector<double> trace;  // objective after each accepted step (first entry: initialization)
};

// ---------------------------------------------------------------------------
// cost terms

inline double expressive_term(const Point2& ee, const BeliefMap& belief, const ReachabilityMap& truth,
                              const PlannerParams& params) {
  const double b = belief.interpolate(ee);
  const double f = truth.reachable_at(ee) ? 1.0 : 0.0;
  return std::exp(params.beta * (b - f));
}

/// alpha * sum_i exp(beta * (b(ee_i) - f(ee_i))) with b bilinearly interpolated.
inline double cost_expressive(const Trajectory& traj, const BeliefMap& belief, const ReachabilityMap& truth,
                              const ArmModel& arm, const PlannerParams& params) {
  require_same_grid(belief.grid(), truth.grid);
  if (params.alpha == 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& q : traj.waypoints) sum += expressive_term(forward_kinematics(arm, q), belief, truth, params);
  return params.alpha * sum;
}

/// Expressive cost against a belief frozen at b0 everywhere.
inline double cost_static(const Trajectory& traj, const ReachabilityMap& truth, const ArmModel& arm,
                          const PlannerParams& params, const BeliefParams& belief_params) {
  return cost_expressive(traj, uniform_belief(truth.grid, belief_params), truth, arm, params);
}

inline double cost_smoothness(const Trajectory& traj, const PlannerParams& params) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    sum += (traj.waypoints[i + 1] - traj.waypoints[i]).squaredNorm();
  }
  return sum / params.lambda;
}

namespace detail {

inline constexpr double kObstacleMargin = 0.01;

struct SegmentContact {
  double distance;
  double s;  // parameter of the closest point along the segment
  Point2 closest;
};

inline SegmentContact closest_on_segment(const Point2& a, const Point2& b, const Point2& c) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? std::clamp((c - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  Point2 p = a + s * ab;
  return {(p - c).norm(), s, p};
}

}  // namespace detail

/// Smallest clearance between any link segment and any obstacle boundary at
/// one configuration (negative inside an obstacle).
inline double clearance(const ArmModel& arm, const Configuration& q, const std::vector<Obstacle>& obstacles) {
  double best = std::numeric_limits<double>::infinity();
  auto pts = joint_positions(arm, q);
  for (const auto& ob : obstacles) {
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      best = std::min(best, detail::closest_on_segment(pts[k], pts[k + 1], ob.center).distance - ob.radius);
    }
  }
  return best;
}

inline bool collision_free(const ArmModel& arm, const Trajectory& traj, const std::vector<Obstacle>& obstacles) {
  if (obstacles.empty()) return true;
  for (const auto& q : traj.waypoints) {
    if (clearance(arm, q, obstacles) <= 0.0) return false;
  }
  return true;
}

/// weight * sum over waypoints, links and obstacles of hinge(radius + margin - distance)^2.
inline double obstacle_penalty(const ArmModel& arm, const Trajectory& traj, const std::vector<Obstacle>& obstacles,
                               double weight) {
  if (obstacles.empty() || weight == 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& q : traj.waypoints) {
    auto pts = joint_positions(arm, q);
    for (const auto& ob : obstacles) {
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double v = ob.radius + detail::kObstacleMargin -
                         detail::closest_on_segment(pts[k], pts[k + 1], ob.center).distance;
        if (v > 0.0) sum += v * v;
      }
    }
  }
  return weight * sum;
}

/// Full planning objective: expressive + smoothness + obstacle penalty.
inline double total_objective(const Trajectory& traj, const BeliefMap& belief, const ReachabilityMap& truth,
                              const ArmModel& arm, const PlannerParams& params,
                              const std::vector<Obstacle>& obstacles = {}, double penalty_weight = 0.0) {
  return cost_expressive(traj, belief, truth, arm, params) + cost_smoothness(traj, params) +
         obstacle_penalty(arm, traj, obstacles, penalty_weight);
}

/// Analytic gradient of total_objective with respect to the interior
/// waypoints 1..N-2 (endpoints are fixed). f is piecewise constant and
/// contributes no gradient.
inline std::vector<Configuration> objective_gradient(const Trajectory& traj, const BeliefMap& belief,
                                                     const ReachabilityMap& truth, const ArmModel& arm,
                                                     const PlannerParams& params,
                                                     const std::vector<Obstacle>& obstacles = {},
                                                     double penalty_weight = 0.0) {
  const std::size_t n = traj.size();
  if (n < 3) return {};
  std::vector<Configuration> grad;
  grad.reserve(n - 2);
  const auto& w = traj.waypoints;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    Configuration g = (2.0 / params.lambda) * (2.0 * w[i] - w[i - 1] - w[i + 1]);

    if (params.alpha != 0.0) {
      const Point2 ee = forward_kinematics(arm, w[i]);
      Point2 db;
      const double b = belief.interpolate(ee, &db);
      if (db.x() != 0.0 || db.y() != 0.0) {
        const double f = truth.reachable_at(ee) ? 1.0 : 0.0;
        const double scale = params.alpha * params.beta * std::exp(params.beta * (b - f));
        g += scale * (jacobian(arm, w[i]).transpose() * db);
      }
    }

    if (!obstacles.empty() && penalty_weight != 0.0) {
      auto pts = joint_positions(arm, w[i]);
      for (const auto& ob : obstacles) {
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
          auto contact = detail::closest_on_segment(pts[k], pts[k + 1], ob.center);
          const double v = ob.radius + detail::kObstacleMargin - contact.distance;
          if (v <= 0.0 || contact.distance == 0.0) continue;
          const Point2 dir = (contact.closest - ob.center) / contact.distance;
          Eigen::Matrix2Xd jp = (1.0 - contact.s) * point_jacobian(arm, w[i], k) +
                                contact.s * point_jacobian(arm, w[i], k + 1);
          g += penalty_weight * (-2.0 * v) * (jp.transpose() * dir);
        }
      }
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

namespace detail {

struct DescentOutcome {
  Trajectory traj;
  double objective;
  bool converged;
  std::size_t iterations;
  std::vector<double> trace;
};

inline Trajectory project(const ArmModel& arm, Trajectory t) {
  for (std::size_t i = 1; i + 1 < t.size(); ++i) t.waypoints[i] = arm.clamp_to_limits(std::move(t.waypoints[i]));
  return t;
}

// Projected gradient descent over the interior waypoints with Armijo
// backtracking. Every accepted step strictly lowers the objective.
inline DescentOutcome descend(const ArmModel& arm, const BeliefMap& belief, const ReachabilityMap& truth,
                              const PlannerParams& params, const std::vector<Obstacle>& obstacles,
                              double penalty_weight, Trajectory x) {
  constexpr double sufficient_decrease = 1e-4;
  constexpr double min_step = 1e-14;
  x = project(arm, std::move(x));
  auto objective = [&](const Trajectory& t) {
    return total_objective(t, belief, truth, arm, params, obstacles, penalty_weight);
  };
  double fx = objective(x);
  DescentOutcome out{x, fx, false, 0, {fx}};
  double step = params.step_init;

  for (std::size_t it = 0; it < params.max_iters; ++it) {
    auto g = objective_gradient(x, belief, truth, arm, params, obstacles, penalty_weight);
    double gnorm2 = 0.0;
    for (const auto& gi : g) gnorm2 += gi.squaredNorm();
    if (gnorm2 == 0.0) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    Trajectory candidate;
    double fc = 0.0;
    double s = step;
    while (s > min_step) {
      candidate = x;
      double decrease = 0.0;
      for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        candidate.waypoints[i] = arm.clamp_to_limits(x.waypoints[i] - s * g[i - 1]);
        decrease += g[i - 1].dot(x.waypoints[i] - candidate.waypoints[i]);
      }
      if (decrease <= 0.0) break;  // projected direction vanished
      fc = objective(candidate);
      if (fc <= fx - sufficient_decrease * decrease && fc < fx) {
        accepted = true;
        break;
      }
      s *= params.armijo_factor;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }

    const double rel = (fx - fc) / std::max(std::abs(fx), 1e-12);
    x = std::move(candidate);
    fx = fc;
    out.trace.push_back(fx);
    ++out.iterations;
    step = s / params.armijo_factor;
    if (rel <= params.tol_rel) {
      out.converged = true;
      break;
    }
  }
  out.traj = std::move(x);
  out.objective = fx;
  return out;
}

// Straight line plus a smooth bump vanishing at both endpoints.
inline Trajectory perturbed_init(const ArmModel& arm, const Configuration& start, const Configuration& goal,
                                 const PlannerParams& params, Rng& rng) {
  Trajectory t = linear_interpolation(start, goal, params.n_waypoints);
  Configuration amp(static_cast<Eigen::Index>(arm.dof()));
  for (Eigen::Index j = 0; j < amp.size(); ++j) {
    amp[j] = uniform(rng, -params.restart_amplitude, params.restart_amplitude);
  }
  const double last = static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    t.waypoints[i] += std::sin(kPi * static_cast<double>(i) / last) * amp;
  }
  return project(arm, std::move(t));
}

inline std::vector<IkSolution> goal_configurations(const ArmModel& arm, const Configuration& start,
                                                   const Point2& target) {
  if (arm.dof() == 2) return inverse_kinematics_2link(arm, target);
  std::vector<IkSolution> out;
  if (auto q = inverse_kinematics_numeric(arm, target, start)) out.push_back({*q, IkBranch::numeric});
  return out;
}

}  // namespace detail

/// Minimizes expressive + smoothness cost over trajectories from `start` to
/// an IK configuration reaching `target`. The final waypoint is pinned to an
/// IK solution; every IK branch is tried with one straight-line and
/// n_restarts perturbed initializations, and the lowest objective wins
/// (earlier candidates win ties, elbow-up before elbow-down).
inline PlanResult optimize_trajectory(const ArmModel& arm, const BeliefMap& belief, const ReachabilityMap& truth,
                                      const Configuration& start, const Point2& target, const PlannerParams& params,
                                      const std::vector<Obstacle>& obstacles = {}, std::uint64_t seed = 0) {
  params.validate();
  require_same_grid(belief.grid(), truth.grid);
  arm.check_dims(start);
  if (!arm.within_limits(start, 1e-9)) throw Error(ErrorCode::invalid_argument, "start configuration violates joint limits");
  const Configuration q0 = arm.clamp_to_limits(start);

  auto goals = detail::goal_configurations(arm, q0, target);
  if (goals.empty()) throw Error(ErrorCode::unreachable_target, "no IK solution reaches the target");

  constexpr int max_ramps = 4;
  std::optional<PlanResult> best;
  for (std::size_t b = 0; b < goals.size(); ++b) {
    Rng rng(derive_seed(seed, b));
    for (std::size_t r = 0; r <= params.n_restarts; ++r) {
      Trajectory init = r == 0 ? linear_interpolation(q0, goals[b].q, params.n_waypoints)
                               : detail::perturbed_init(arm, q0, goals[b].q, params, rng);
      double weight = obstacles.empty() ? 0.0 : params.obstacle_penalty_weight;
      auto out = detail::descend(arm, belief, truth, params, obstacles, weight, std::move(init));
      for (int ramp = 0; ramp < max_ramps && !collision_free(arm, out.traj, obstacles); ++ramp) {
        weight *= 10.0;
        out = detail::descend(arm, belief, truth, params, obstacles, weight, std::move(out.traj));
      }
      if (!collision_free(arm, out.traj, obstacles)) continue;

      const double obj = cost_expressive(out.traj, belief, truth, arm, params) + cost_smoothness(out.traj, params);
      if (!best || obj < best->objective) {
        best = PlanResult{std::move(out.traj), obj, out.converged, r, goals[b].branch, out.iterations,
                          std::move(out.trace)};
      }
    }
  }
  if (!best) throw Error(ErrorCode::planning_failure, "no collision-free trajectory found");
  return *best;
}

struct RempStepResult {
  BeliefMap belief;
  PlanResult plan;
};

/// Plan against the current belief, then return the belief after the
/// observer watches the planned trajectory.
inline RempStepResult remp_step(const ArmModel& arm, const BeliefMap& belief, const ReachabilityMap& truth,
                                const Configuration& start, const Point2& target, const BeliefParams& belief_params,
                                const PlannerParams& planner_params, const std::vector<Obstacle>& obstacles = {},
                                std::uint64_t seed = 0) {
  PlanResult plan = optimize_trajectory(arm, belief, truth, start, target, planner_params, obstacles, seed);
  BeliefMap next = update_belief(belief, arm, plan.trajectory, belief_params);
  return {std::move(next), std::move(plan)};
}

/// Plan under the static observer model: the belief is frozen at b0.
inline PlanResult plan_static(const ArmModel& arm, const ReachabilityMap& truth, const Configuration& start,
                              const Point2& target, const BeliefParams& belief_params,
                              const PlannerParams& planner_params, const std::vector<Obstacle>& obstacles = {},
                              std::uint64_t seed = 0) {
  return optimize_trajectory(arm, uniform_belief(truth.grid, belief_params), truth, start, target, planner_params,
                             obstacles, seed);
}

}  // namespace remp
