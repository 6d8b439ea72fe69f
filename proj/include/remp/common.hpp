#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace remp {

using Point2 = Eigen::Vector2d;
using Configuration = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  unsupported_arm,
  unreachable_target,
  planning_failure,
  out_of_bounds,
  not_found,
  wrong_phase,
  conflict,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::unsupported_arm: return "unsupported_arm";
    case ErrorCode::unreachable_target: return "unreachable_target";
    case ErrorCode::planning_failure: return "planning_failure";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::wrong_phase: return "wrong_phase";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

template <typename... Streams>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, Streams... rest) {
  return derive_seed(derive_seed(seed, stream), static_cast<std::uint64_t>(rest)...);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace remp
