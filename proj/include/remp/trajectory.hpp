#pragma once

#include <vector>

#include "remp/arm.hpp"

namespace remp {

/// Ordered joint-space waypoints; the first is the start configuration and
/// the last reaches the target.
struct Trajectory {
  std::vector<Configuration> waypoints;

  std::size_t size() const { return waypoints.size(); }
  bool empty() const { return waypoints.empty(); }
  const Configuration& front() const { return waypoints.front(); }
  const Configuration& back() const { return waypoints.back(); }

  std::vector<Point2> ee_path(const ArmModel& arm) const {
    std::vector<Point2> out;
    out.reserve(waypoints.size());
    for (const auto& q : waypoints) out.push_back(forward_kinematics(arm, q));
    return out;
  }

  bool within_limits(const ArmModel& arm, double tol = 1e-12) const {
    for (const auto& q : waypoints) {
      if (!arm.within_limits(q, tol)) return false;
    }
    return true;
  }
};

/// Joint-space straight line with n waypoints, endpoints included.
inline Trajectory linear_interpolation(const Configuration& from, const Configuration& to, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "trajectory needs at least 2 waypoints");
  if (from.size() != to.size()) throw Error(ErrorCode::dimension_mismatch, "endpoint dimension mismatch");
  Trajectory t;
  t.waypoints.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n - 1);
    t.waypoints.push_back((1.0 - s) * from + s * to);
  }
  t.waypoints.back() = to;
  return t;
}

/// Resample at `frames` evenly spaced parameter values by piecewise-linear
/// interpolation between waypoints.
inline Trajectory resample(const Trajectory& traj, std::size_t frames) {
  if (traj.size() < 2 || frames < 2) throw Error(ErrorCode::invalid_argument, "resample needs >= 2 points");
  Trajectory out;
  const double last = static_cast<double>(traj.size() - 1);
  for (std::size_t f = 0; f < frames; ++f) {
    const double u = last * static_cast<double>(f) / static_cast<double>(frames - 1);
    auto i = std::min(static_cast<std::size_t>(u), traj.size() - 2);
    const double s = u - static_cast<double>(i);
    out.waypoints.push_back((1.0 - s) * traj.waypoints[i] + s * traj.waypoints[i + 1]);
  }
  return out;
}

}  // namespace remp
