#pragma once

#include <cstring>
#include <limits>
#include <span>
#include <vector>

#include "remp/grid.hpp"
#include "remp/trajectory.hpp"

namespace remp {

struct BeliefParams {
  double gamma = 500.0;  // extrapolation decay, 1/m^2
  double delta = 0.01;   // probability clamp
  double b0 = 0.5;       // prior

  void validate() const {
    if (!(gamma > 0.0)) throw Error(ErrorCode::invalid_argument, "gamma must be > 0");
    if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorCode::invalid_argument, "delta must be in (0, 0.5)");
    if (!(b0 > 0.0 && b0 < 1.0)) throw Error(ErrorCode::invalid_argument, "b0 must be in (0, 1)");
  }
};

/// Observer's per-cell probability that the arm can reach the cell.
class BeliefMap {
 public:
  BeliefMap(WorkspaceGrid grid, std::vector<double> values, double delta)
      : grid_(std::move(grid)), values_(std::move(values)), delta_(delta) {
    if (values_.size() != grid_.size()) throw Error(ErrorCode::dimension_mismatch, "belief size != grid size");
    if (!(delta_ > 0.0 && delta_ < 0.5)) throw Error(ErrorCode::invalid_argument, "delta must be in (0, 0.5)");
    for (double& v : values_) v = clamp(v);
  }

  const WorkspaceGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double delta() const { return delta_; }
  double at(std::size_t idx) const { return values_[idx]; }

  double clamp(double v) const { return std::clamp(v, delta_, 1.0 - delta_); }

  /// Value of the cell containing p; delta off-grid.
  double lookup(const Point2& p) const {
    auto c = grid_.cell_of(p);
    return c ? values_[*c] : delta_;
  }

  /// Bilinear interpolation between cell centers, constant beyond the outer
  /// centers and delta off-grid. Writes the spatial gradient when requested.
  double interpolate(const Point2& p, Point2* gradient = nullptr) const {
    if (gradient) gradient->setZero();
    if (!grid_.contains(p)) return delta_;
    const double fx = (p.x() - grid_.x_range().lo) / grid_.dx();
    const double fy = (p.y() - grid_.y_range().lo) / grid_.dy();
    const double mx = static_cast<double>(grid_.nx() - 1);
    const double my = static_cast<double>(grid_.ny() - 1);
    const bool in_x = fx >= 0.0 && fx <= mx;
    const bool in_y = fy >= 0.0 && fy <= my;
    const double cx = std::clamp(fx, 0.0, mx);
    const double cy = std::clamp(fy, 0.0, my);
    const auto ix = std::min(static_cast<std::size_t>(cx), grid_.nx() - 2);
    const auto iy = std::min(static_cast<std::size_t>(cy), grid_.ny() - 2);
    const double tx = cx - static_cast<double>(ix);
    const double ty = cy - static_cast<double>(iy);
    const double b00 = values_[grid_.index(ix, iy)];
    const double b10 = values_[grid_.index(ix + 1, iy)];
    const double b01 = values_[grid_.index(ix, iy + 1)];
    const double b11 = values_[grid_.index(ix + 1, iy + 1)];
    if (gradient) {
      if (in_x) gradient->x() = ((1.0 - ty) * (b10 - b00) + ty * (b11 - b01)) / grid_.dx();
      if (in_y) gradient->y() = ((1.0 - tx) * (b01 - b00) + tx * (b11 - b10)) / grid_.dy();
    }
    return (1.0 - tx) * (1.0 - ty) * b00 + tx * (1.0 - ty) * b10 + (1.0 - tx) * ty * b01 + tx * ty * b11;
  }

  /// Order-independent digest of the values, for auditing belief threading.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values_) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix_seed(h ^ bits);
    }
    return h;
  }

  friend bool operator==(const BeliefMap&, const BeliefMap&) = default;

 private:
  WorkspaceGrid grid_;
  std::vector<double> values_;
  double delta_;
};

inline BeliefMap uniform_belief(const WorkspaceGrid& grid, const BeliefParams& params) {
  params.validate();
  return BeliefMap(grid, std::vector<double>(grid.size(), params.b0), params.delta);
}

/// Belief that equals 1-delta on reachable cells and delta elsewhere.
inline BeliefMap indicator_belief(const ReachabilityMap& truth, double delta, bool inverted = false) {
  std::vector<double> v(truth.grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (truth.at(i) != inverted) ? 1.0 - delta : delta;
  return BeliefMap(truth.grid, std::move(v), delta);
}

/// min over waypoints of the squared distance between the end-effector and x.
inline double trajectory_distance(std::span<const Point2> ee_path, const Point2& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ee_path) best = std::min(best, (p - x).squaredNorm());
  return best;
}

inline double trajectory_distance(const ArmModel& arm, const Trajectory& traj, const Point2& x) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  auto path = traj.ee_path(arm);
  return trajectory_distance(path, x);
}

/// Same distance measured to a whole cell: zero for any cell that contains
/// an end-effector waypoint.
inline double cell_trajectory_distance(std::span<const Point2> ee_path, const WorkspaceGrid& grid, std::size_t cell) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ee_path) best = std::min(best, grid.squared_distance_to_cell(p, cell));
  return best;
}

/// One observation step: binary-hypothesis Bayes per cell with
/// p(traj | reachable) = exp(-gamma d) and p(traj | unreachable) = 1 - exp(-gamma d).
inline double posterior(double prior, double likelihood) {
  const double num = prior * likelihood;
  const double den = num + (1.0 - prior) * (1.0 - likelihood);
  return den > 0.0 ? num / den : prior;
}

inline BeliefMap update_belief(const BeliefMap& belief, std::span<const Point2> ee_path, const BeliefParams& params) {
  params.validate();
  if (ee_path.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  const auto& grid = belief.grid();
  std::vector<double> next(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const double likelihood = std::exp(-params.gamma * cell_trajectory_distance(ee_path, grid, c));
    next[c] = posterior(belief.at(c), likelihood);
  }
  return BeliefMap(grid, std::move(next), belief.delta());
}

inline BeliefMap update_belief(const BeliefMap& belief, const ArmModel& arm, const Trajectory& traj,
                               const BeliefParams& params) {
  if (traj.empty()) throw Error(ErrorCode::invalid_argument, "empty trajectory");
  auto path = traj.ee_path(arm);
  return update_belief(belief, path, params);
}

inline void require_same_grid(const WorkspaceGrid& a, const WorkspaceGrid& b) {
  if (!(a == b)) throw Error(ErrorCode::dimension_mismatch, "belief and reachability grids differ");
}

/// Intersection over union of {belief > threshold} against the reachable set.
/// Two empty sets score 1.
inline double iou(const BeliefMap& belief, const ReachabilityMap& truth, double threshold = 0.5) {
  require_same_grid(belief.grid(), truth.grid);
  std::size_t inter = 0, uni = 0;
  for (std::size_t c = 0; c < truth.reachable.size(); ++c) {
    const bool pred = belief.at(c) > threshold;
    const bool real = truth.at(c);
    inter += (pred && real);
    uni += (pred || real);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// IoU of two explicit membership lists over the same query set.
inline double iou_of_sets(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::dimension_mismatch, "set sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    inter += (predicted[i] && actual[i]);
    uni += (predicted[i] || actual[i]);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iou_on_queries(const BeliefMap& belief, const ReachabilityMap& truth, std::span<const Point2> queries,
                             double threshold = 0.5) {
  require_same_grid(belief.grid(), truth.grid);
  if (queries.empty()) throw Error(ErrorCode::invalid_argument, "no query points");
  std::vector<bool> pred, real;
  for (const auto& q : queries) {
    auto c = truth.grid.cell_of(q);
    if (!c) throw Error(ErrorCode::out_of_bounds, "query point outside the workspace grid");
    pred.push_back(belief.at(*c) > threshold);
    real.push_back(truth.at(*c));
  }
  return iou_of_sets(pred, real);
}

/// L1 distance between belief and the reachability indicator.
inline double misalignment(const BeliefMap& belief, const ReachabilityMap& truth) {
  require_same_grid(belief.grid(), truth.grid);
  double d = 0.0;
  for (std::size_t c = 0; c < truth.reachable.size(); ++c) {
    d += std::abs(belief.at(c) - (truth.at(c) ? 1.0 : 0.0));
  }
  return d;
}

}  // namespace remp
