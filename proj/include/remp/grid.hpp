#pragma once

#include <optional>
#include <vector>

#include "remp/arm.hpp"

namespace remp {

/// Regular lattice of cell centers over [x_range] x [y_range]. The ranges are
/// the extreme cell centers; each cell is a square of one spacing centered on
/// its lattice point. Cells are stored row-major (index = iy * nx + ix).
class WorkspaceGrid {
 public:
  WorkspaceGrid(Interval x_range, Interval y_range, std::size_t nx, std::size_t ny)
      : x_(x_range), y_(y_range), nx_(nx), ny_(ny) {
    if (nx < 2 || ny < 2) throw Error(ErrorCode::invalid_argument, "grid resolution must be >= 2 per axis");
    if (!(x_.width() > 0.0) || !(y_.width() > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "grid ranges must have positive width");
    }
  }

  /// [-0.25, 0.25]^2 m with 0.01 m spacing.
  static WorkspaceGrid default_grid() { return WorkspaceGrid({-0.25, 0.25}, {-0.25, 0.25}, 51, 51); }

  const Interval& x_range() const { return x_; }
  const Interval& y_range() const { return y_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double dx() const { return x_.width() / static_cast<double>(nx_ - 1); }
  double dy() const { return y_.width() / static_cast<double>(ny_ - 1); }

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }
  std::size_t ix_of(std::size_t idx) const { return idx % nx_; }
  std::size_t iy_of(std::size_t idx) const { return idx / nx_; }

  Point2 center(std::size_t ix, std::size_t iy) const {
    return {x_.lo + static_cast<double>(ix) * dx(), y_.lo + static_cast<double>(iy) * dy()};
  }
  Point2 center(std::size_t idx) const { return center(ix_of(idx), iy_of(idx)); }

  /// Cell containing p, or nullopt when p lies outside every cell.
  std::optional<std::size_t> cell_of(const Point2& p) const {
    const double fx = (p.x() - x_.lo) / dx();
    const double fy = (p.y() - y_.lo) / dy();
    if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
    const double rx = std::floor(fx + 0.5);
    const double ry = std::floor(fy + 0.5);
    if (rx < 0.0 || ry < 0.0 || rx >= static_cast<double>(nx_) || ry >= static_cast<double>(ny_)) {
      return std::nullopt;
    }
    return index(static_cast<std::size_t>(rx), static_cast<std::size_t>(ry));
  }

  bool contains(const Point2& p) const { return cell_of(p).has_value(); }

  /// Squared distance from p to the square of cell idx (0 when inside).
  double squared_distance_to_cell(const Point2& p, std::size_t idx) const {
    const Point2 c = center(idx);
    const double ex = std::max(0.0, std::abs(p.x() - c.x()) - 0.5 * dx());
    const double ey = std::max(0.0, std::abs(p.y() - c.y()) - 0.5 * dy());
    return ex * ex + ey * ey;
  }

  friend bool operator==(const WorkspaceGrid&, const WorkspaceGrid&) = default;

 private:
  Interval x_;
  Interval y_;
  std::size_t nx_;
  std::size_t ny_;
};

/// Ground-truth reachability per cell. `witness` keeps, for each reachable
/// cell, the first sampled end-effector position that landed inside it.
struct ReachabilityMap {
  WorkspaceGrid grid;
  std::vector<std::uint8_t> reachable;
  std::vector<std::optional<Point2>> witness;

  bool at(std::size_t idx) const { return reachable[idx] != 0; }

  /// f(x): 1 inside a reachable cell, 0 elsewhere (including off-grid).
  bool reachable_at(const Point2& p) const {
    auto c = grid.cell_of(p);
    return c && reachable[*c] != 0;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto r : reachable) n += r;
    return n;
  }

  std::vector<std::size_t> reachable_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < reachable.size(); ++i) {
      if (reachable[i]) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> unreachable_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < reachable.size(); ++i) {
      if (!reachable[i]) out.push_back(i);
    }
    return out;
  }
};

inline constexpr std::size_t kDefaultSamplesPerJoint = 512;

/// Marks every cell hit by the end-effector over a dense sweep of the
/// joint-limit box (samples_per_joint values per joint, endpoints included).
inline ReachabilityMap compute_reachability_map(const ArmModel& arm, const WorkspaceGrid& grid,
                                                std::size_t samples_per_joint = kDefaultSamplesPerJoint) {
  if (samples_per_joint < 64) {
    throw Error(ErrorCode::invalid_argument, "samples_per_joint must be >= 64");
  }
  const std::size_t n = arm.dof();
  std::vector<std::vector<double>> values(n);
  double total = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Interval& lim = arm.joint_limits()[j];
    if (lim.width() == 0.0) {
      values[j] = {lim.lo};
    } else {
      values[j].resize(samples_per_joint);
      for (std::size_t k = 0; k < samples_per_joint; ++k) {
        values[j][k] = lim.lo + lim.width() * static_cast<double>(k) / static_cast<double>(samples_per_joint - 1);
      }
    }
    total *= static_cast<double>(values[j].size());
  }
  if (total > 2e8) {
    throw Error(ErrorCode::invalid_argument, "joint sweep too large; lower samples_per_joint");
  }

  ReachabilityMap map{grid, std::vector<std::uint8_t>(grid.size(), 0), std::vector<std::optional<Point2>>(grid.size())};

  // odometer over the sample lattice; the innermost joint varies fastest
  std::vector<std::size_t> counter(n, 0);
  Configuration q(static_cast<Eigen::Index>(n));
  while (true) {
    for (std::size_t j = 0; j < n; ++j) q[static_cast<Eigen::Index>(j)] = values[j][counter[j]];
    const Point2 p = forward_kinematics(arm, q);
    if (auto c = grid.cell_of(p)) {
      if (!map.reachable[*c]) {
        map.reachable[*c] = 1;
        map.witness[*c] = p;
      }
    }
    std::size_t j = n;
    while (j-- > 0) {
      if (++counter[j] < values[j].size()) break;
      counter[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return map;
}

}  // namespace remp
