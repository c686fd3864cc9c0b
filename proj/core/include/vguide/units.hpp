#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vguide {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Symmetric saturation to [-limit, limit].
inline double saturate(double x, double limit) {
  return std::clamp(x, -limit, limit);
}

/// sign with sign(0) = 0, so dry friction does not chatter at rest.
inline double sign0(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

inline bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace vguide
