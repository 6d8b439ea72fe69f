#pragma once

#include <optional>
#include <string>
#include <vector>

#include "remp/common.hpp"

namespace remp {

/// Planar serial arm with revolute joints. Joint i rotates link i relative to
/// link i-1; angles accumulate along the chain.
class ArmModel {
 public:
  ArmModel(std::vector<double> link_lengths, std::vector<Interval> joint_limits,
           Point2 base_position = Point2::Zero())
      : link_lengths_(std::move(link_lengths)),
        joint_limits_(std::move(joint_limits)),
        base_(std::move(base_position)) {
    if (link_lengths_.empty()) {
      throw Error(ErrorCode::invalid_argument, "arm needs at least one link");
    }
    if (joint_limits_.size() != link_lengths_.size()) {
      throw Error(ErrorCode::dimension_mismatch, "one joint limit per link required");
    }
    for (double l : link_lengths_) {
      if (!(l > 0.0)) throw Error(ErrorCode::invalid_argument, "link lengths must be positive");
    }
    for (const auto& lim : joint_limits_) {
      if (!(lim.lo <= lim.hi) || lim.lo < -2.0 * kPi - 1e-12 || lim.hi > 2.0 * kPi + 1e-12) {
        throw Error(ErrorCode::invalid_argument, "joint limit must be a non-empty interval within [-2pi, 2pi]");
      }
    }
  }

  /// Arm with every joint over [-pi, pi].
  static ArmModel full_range(std::vector<double> link_lengths, Point2 base = Point2::Zero()) {
    std::vector<Interval> limits(link_lengths.size(), Interval{-kPi, kPi});
    return ArmModel(std::move(link_lengths), std::move(limits), std::move(base));
  }

  std::size_t dof() const { return link_lengths_.size(); }
  const std::vector<double>& link_lengths() const { return link_lengths_; }
  const std::vector<Interval>& joint_limits() const { return joint_limits_; }
  const Point2& base_position() const { return base_; }

  double max_reach() const {
    double s = 0.0;
    for (double l : link_lengths_) s += l;
    return s;
  }

  void check_dims(const Configuration& q) const {
    if (static_cast<std::size_t>(q.size()) != dof()) {
      throw Error(ErrorCode::dimension_mismatch,
                  "configuration has " + std::to_string(q.size()) + " joints, arm has " +
                      std::to_string(dof()));
    }
  }

  bool within_limits(const Configuration& q, double tol = 1e-12) const {
    if (static_cast<std::size_t>(q.size()) != dof()) return false;
    for (std::size_t i = 0; i < dof(); ++i) {
      if (!joint_limits_[i].contains(q[static_cast<Eigen::Index>(i)], tol)) return false;
    }
    return true;
  }

  Configuration clamp_to_limits(Configuration q) const {
    check_dims(q);
    for (std::size_t i = 0; i < dof(); ++i) {
      auto k = static_cast<Eigen::Index>(i);
      q[k] = joint_limits_[i].clamp(q[k]);
    }
    return q;
  }

  friend bool operator==(const ArmModel& a, const ArmModel& b) {
    return a.link_lengths_ == b.link_lengths_ && a.joint_limits_ == b.joint_limits_ && a.base_ == b.base_;
  }

 private:
  std::vector<double> link_lengths_;
  std::vector<Interval> joint_limits_;
  Point2 base_;
};

/// Positions of base, every joint and the end-effector (dof + 1 points).
inline std::vector<Point2> joint_positions(const ArmModel& arm, const Configuration& q) {
  arm.check_dims(q);
  std::vector<Point2> pts;
  pts.reserve(arm.dof() + 1);
  pts.push_back(arm.base_position());
  double angle = 0.0;
  Point2 p = arm.base_position();
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    angle += q[static_cast<Eigen::Index>(i)];
    p += arm.link_lengths()[i] * Point2(std::cos(angle), std::sin(angle));
    pts.push_back(p);
  }
  return pts;
}

inline Point2 forward_kinematics(const ArmModel& arm, const Configuration& q) {
  arm.check_dims(q);
  double angle = 0.0;
  Point2 p = arm.base_position();
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    angle += q[static_cast<Eigen::Index>(i)];
    p.x() += arm.link_lengths()[i] * std::cos(angle);
    p.y() += arm.link_lengths()[i] * std::sin(angle);
  }
  return p;
}

/// Jacobian of the point at the end of link `upto` (1-based; dof() is the
/// end-effector) with respect to all joints. Columns past `upto` are zero.
inline Eigen::Matrix2Xd point_jacobian(const ArmModel& arm, const Configuration& q, std::size_t upto) {
  arm.check_dims(q);
  const auto n = static_cast<Eigen::Index>(arm.dof());
  Eigen::Matrix2Xd jac = Eigen::Matrix2Xd::Zero(2, n);
  std::vector<double> c(arm.dof()), s(arm.dof());
  double angle = 0.0;
  for (std::size_t i = 0; i < arm.dof(); ++i) {
    angle += q[static_cast<Eigen::Index>(i)];
    c[i] = arm.link_lengths()[i] * std::cos(angle);
    s[i] = arm.link_lengths()[i] * std::sin(angle);
  }
  // column j = sum over links k >= j (up to `upto`) of l_k * (-sin, cos)(theta_k)
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = upto; k-- > 0;) {
    sx -= s[k];
    sy += c[k];
    jac(0, static_cast<Eigen::Index>(k)) = sx;
    jac(1, static_cast<Eigen::Index>(k)) = sy;
  }
  return jac;
}

inline Eigen::Matrix2Xd jacobian(const ArmModel& arm, const Configuration& q) {
  return point_jacobian(arm, q, arm.dof());
}

enum class IkBranch { elbow_up, elbow_down, single, numeric };

inline std::string_view to_string(IkBranch b) {
  switch (b) {
    case IkBranch::elbow_up: return "elbow_up";
    case IkBranch::elbow_down: return "elbow_down";
    case IkBranch::single: return "single";
    case IkBranch::numeric: return "numeric";
  }
  return "unknown";
}

struct IkSolution {
  Configuration q;
  IkBranch branch;
};

namespace detail {

// Shift an angle by multiples of 2pi so that it lands inside `lim`, if possible.
inline std::optional<double> wrap_into(double a, const Interval& lim) {
  constexpr double tol = 1e-12;
  for (int k = -2; k <= 2; ++k) {
    double v = a + 2.0 * kPi * k;
    if (lim.contains(v, tol)) return lim.clamp(v);
  }
  return std::nullopt;
}

}  // namespace detail

/// Closed-form inverse kinematics for a 2-link arm. Returns the elbow-up
/// (negative elbow angle) solution first, elbow-down second; a single
/// solution when both branches coincide on the annulus boundary.
inline std::vector<IkSolution> inverse_kinematics_2link(const ArmModel& arm, const Point2& target) {
  if (arm.dof() != 2) {
    throw Error(ErrorCode::unsupported_arm, "closed-form IK requires a 2-link arm");
  }
  const double l1 = arm.link_lengths()[0];
  const double l2 = arm.link_lengths()[1];
  const Point2 rel = target - arm.base_position();
  const double r2 = rel.squaredNorm();
  const double r = std::sqrt(r2);
  constexpr double reach_tol = 1e-12;
  if (r > l1 + l2 + reach_tol || r < std::abs(l1 - l2) - reach_tol) return {};

  double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  c2 = std::clamp(c2, -1.0, 1.0);
  const double elbow = std::acos(c2);

  std::vector<std::pair<double, IkBranch>> elbows;
  if (std::sin(elbow) < 1e-9) {
    elbows.emplace_back(elbow, IkBranch::single);
  } else {
    elbows.emplace_back(-elbow, IkBranch::elbow_up);
    elbows.emplace_back(elbow, IkBranch::elbow_down);
  }

  std::vector<IkSolution> out;
  for (auto [q2, branch] : elbows) {
    double q1 = std::atan2(rel.y(), rel.x()) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    auto w1 = detail::wrap_into(q1, arm.joint_limits()[0]);
    auto w2 = detail::wrap_into(q2, arm.joint_limits()[1]);
    if (!w1 || !w2) continue;
    Configuration q(2);
    q << *w1, *w2;
    if ((forward_kinematics(arm, q) - target).norm() > 1e-9) continue;
    out.push_back({std::move(q), branch});
  }
  return out;
}

/// Damped least-squares IK for arms without a closed form. Returns nullopt
/// when the residual does not drop below `tol`.
inline std::optional<Configuration> inverse_kinematics_numeric(const ArmModel& arm, const Point2& target,
                                                               Configuration seed, double tol = 1e-10,
                                                               int max_iters = 500) {
  Configuration q = arm.clamp_to_limits(std::move(seed));
  double damping = 1e-4;
  double err_norm = (target - forward_kinematics(arm, q)).norm();
  for (int it = 0; it < max_iters && err_norm > tol; ++it) {
    const Point2 err = target - forward_kinematics(arm, q);
    const Eigen::Matrix2Xd jac = jacobian(arm, q);
    const Eigen::Matrix2d jjt = jac * jac.transpose() + damping * Eigen::Matrix2d::Identity();
    Configuration trial = q + jac.transpose() * jjt.ldlt().solve(err);
    for (std::size_t i = 0; i < arm.dof(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      // full-turn joints wrap instead of sticking to a limit
      if (auto w = detail::wrap_into(trial[k], arm.joint_limits()[i])) trial[k] = *w;
    }
    trial = arm.clamp_to_limits(std::move(trial));
    const double trial_norm = (target - forward_kinematics(arm, trial)).norm();
    if (trial_norm < err_norm) {
      q = std::move(trial);
      err_norm = trial_norm;
      damping = std::max(damping * 0.3, 1e-12);
    } else {
      damping *= 10.0;
      if (damping > 1e6) break;
    }
  }
  if ((target - forward_kinematics(arm, q)).norm() <= tol) return q;
  return std::nullopt;
}

/// Equal 0.1 m links, full joint range.
inline ArmModel robot_a() { return ArmModel::full_range({0.1, 0.1}); }

/// 0.13 m and 0.07 m links, full joint range.
inline ArmModel robot_b() { return ArmModel::full_range({0.13, 0.07}); }

inline std::vector<std::string> preset_names() { return {"A", "B"}; }

inline std::optional<ArmModel> find_preset(std::string_view name) {
  if (name == "A" || name == "robot_a") return robot_a();
  if (name == "B" || name == "robot_b") return robot_b();
  return std::nullopt;
}

inline ArmModel preset(std::string_view name) {
  auto arm = find_preset(name);
  if (!arm) throw Error(ErrorCode::not_found, "unknown robot preset '" + std::string(name) + "'");
  return *arm;
}

}  // namespace remp
