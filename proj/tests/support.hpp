#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the code paths they check.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "remp/collab.hpp"
#include "remp/calibration.hpp"

namespace remp::testing {

inline const ReachabilityMap& truth_a() {
  static const ReachabilityMap m = compute_reachability_map(robot_a(), WorkspaceGrid::default_grid());
  return m;
}

inline const ReachabilityMap& truth_b() {
  static const ReachabilityMap m = compute_reachability_map(robot_b(), WorkspaceGrid::default_grid());
  return m;
}

inline const ReachabilityMap& truth_of(const std::string& name) { return name == "A" ? truth_a() : truth_b(); }

/// End-effector by explicit trigonometry, one cumulative angle at a time.
inline Point2 oracle_fk(const std::vector<double>& lengths, const Point2& base, const std::vector<double>& q) {
  double x = base.x(), y = base.y(), theta = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    theta += q[i];
    x += lengths[i] * std::cos(theta);
    y += lengths[i] * std::sin(theta);
  }
  return {x, y};
}

/// Whether the closed square of a cell meets the annulus rmin <= |p| <= rmax.
inline bool oracle_cell_meets_annulus(const WorkspaceGrid& g, std::size_t idx, double rmin, double rmax) {
  const Point2 c = g.center(idx);
  const double hx = 0.5 * g.dx(), hy = 0.5 * g.dy();
  const double nx = std::max(0.0, std::abs(c.x()) - hx), ny = std::max(0.0, std::abs(c.y()) - hy);
  const double fx = std::abs(c.x()) + hx, fy = std::abs(c.y()) + hy;
  const double near = std::hypot(nx, ny), far = std::hypot(fx, fy);
  return near <= rmax && far >= rmin;
}

/// Fraction of cells where the computed map agrees with the annulus oracle.
inline double annulus_agreement(const ReachabilityMap& m, double rmin, double rmax) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < m.grid.size(); ++i) agree += (m.at(i) == oracle_cell_meets_annulus(m.grid, i, rmin, rmax));
  return static_cast<double>(agree) / static_cast<double>(m.grid.size());
}

/// L1 misalignment recomputed from scratch.
inline double oracle_misalignment(const BeliefMap& b, const ReachabilityMap& t) {
  double d = 0.0;
  for (std::size_t i = 0; i < t.grid.size(); ++i) d += std::abs(b.values()[i] - static_cast<double>(t.reachable[i]));
  return d;
}

/// Minimal final misalignment over every demo sequence: all ordered (or,
/// when `ordered` is false, index-increasing) K-tuples of distinct targets
/// and every start for every demo.
inline double brute_force_min_d(const CalibrationProblem& p, const ArmModel& arm, const ReachabilityMap& truth,
                                const BeliefMap& prior, bool ordered) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> used(p.targets.size(), false);
  std::function<void(const BeliefMap&, std::size_t, std::size_t)> rec = [&](const BeliefMap& b, std::size_t depth,
                                                                             std::size_t min_index) {
    if (depth == p.demo_count) {
      best = std::min(best, oracle_misalignment(b, truth));
      return;
    }
    for (std::size_t g = ordered ? 0 : min_index; g < p.targets.size(); ++g) {
      if (used[g]) continue;
      used[g] = true;
      for (std::size_t s = 0; s < p.starts.size(); ++s) {
        auto plan = optimize_trajectory(arm, b, truth, p.starts[s], p.targets[g], p.planner_params, {},
                                        pair_seed(p.seed, g, s));
        std::vector<double> next(b.values().size());
        const auto path = plan.trajectory.ee_path(arm);
        for (std::size_t c = 0; c < next.size(); ++c) {
          double d = std::numeric_limits<double>::infinity();
          const Point2 cc = truth.grid.center(c);
          for (const auto& e : path) {
            const double ex = std::max(0.0, std::abs(e.x() - cc.x()) - 0.5 * truth.grid.dx());
            const double ey = std::max(0.0, std::abs(e.y() - cc.y()) - 0.5 * truth.grid.dy());
            d = std::min(d, ex * ex + ey * ey);
          }
          const double l = std::exp(-p.belief_params.gamma * d);
          const double prior_c = b.values()[c];
          const double den = prior_c * l + (1.0 - prior_c) * (1.0 - l);
          next[c] = den > 0.0 ? prior_c * l / den : prior_c;
        }
        rec(BeliefMap(b.grid(), std::move(next), b.delta()), depth + 1, g + 1);
      }
      used[g] = false;
    }
  };
  rec(prior, 0, 0);
  return best;
}

/// Central finite-difference gradient of `f` with respect to interior
/// waypoints of `traj`.
inline std::vector<Configuration> fd_gradient(const Trajectory& traj,
                                              const std::function<double(const Trajectory&)>& f, double h = 1e-5) {
  std::vector<Configuration> out;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    Configuration g(traj.waypoints[i].size());
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      Trajectory plus = traj, minus = traj;
      plus.waypoints[i][j] += h;
      minus.waypoints[i][j] -= h;
      g[j] = (f(plus) - f(minus)) / (2.0 * h);
    }
    out.push_back(g);
  }
  return out;
}

/// Distance from p to the nearest line where either f (cell edges) or the
/// bilinear belief (cell-center lines) is non-smooth.
inline double distance_to_kinks(const WorkspaceGrid& g, const Point2& p) {
  auto axis = [](double v, double lo, double d) {
    const double u = (v - lo) / d;
    const double to_center = std::abs(u - std::round(u));
    const double to_edge = std::abs(u - 0.5 - std::round(u - 0.5));
    return std::min(to_center, to_edge) * d;
  };
  return std::min(axis(p.x(), g.x_range().lo, g.dx()), axis(p.y(), g.y_range().lo, g.dy()));
}

inline Configuration random_config(const ArmModel& arm, Rng& rng) {
  Configuration q(static_cast<Eigen::Index>(arm.dof()));
  for (std::size_t j = 0; j < arm.dof(); ++j) {
    q[static_cast<Eigen::Index>(j)] = uniform(rng, arm.joint_limits()[j].lo, arm.joint_limits()[j].hi);
  }
  return q;
}

/// A reachable target: the end-effector of a random configuration.
inline Point2 random_reachable_target(const ArmModel& arm, Rng& rng) {
  return forward_kinematics(arm, random_config(arm, rng));
}

/// A non-trivial belief: uniform prior updated with a few random sweeps.
inline BeliefMap random_belief(const ArmModel& arm, const ReachabilityMap& truth, const BeliefParams& bp, Rng& rng,
                               int sweeps = 2) {
  BeliefMap b = uniform_belief(truth.grid, bp);
  for (int k = 0; k < sweeps; ++k) {
    b = update_belief(b, arm, linear_interpolation(random_config(arm, rng), random_config(arm, rng), 15), bp);
  }
  return b;
}

}  // namespace remp::testing
