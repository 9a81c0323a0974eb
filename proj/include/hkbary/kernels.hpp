#pragma once

#include <cmath>

#include "hkbary/geometry.hpp"

namespace hkbary {

// Truncated cosine: cos(|s|) on [0, pi/2], exactly 0 beyond.  The explicit
// zero branch matters: std::cos(pi/2) is ~6e-17, not 0, and the transport
// kernel must vanish identically outside the reach.
inline double cos_trunc(double s) {
  s = std::fabs(s);
  if (s >= kHalfPi) return 0.0;
  return std::cos(s);
}

// Companion sine, 0 outside [0, pi/2].  With this convention the derivative
// of cos_trunc(s)^2 is -2 cos_trunc(s) sin_trunc(s) for every s >= 0.
inline double sin_trunc(double s) {
  s = std::fabs(s);
  if (s >= kHalfPi) return 0.0;
  return std::sin(s);
}

// Transport kernel cos^2(|x - y| / kappa), truncated at |x - y| = kappa pi/2.
inline double cos2_kernel(const Point& x, const Point& y, int dim, const Kappa& kappa) {
  const double c = cos_trunc(distance(x, y, dim) / kappa.value);
  return c * c;
}

// Same, for a precomputed distance.
inline double cos2_kernel_at(double dist, const Kappa& kappa) {
  const double c = cos_trunc(dist / kappa.value);
  return c * c;
}

}  // namespace hkbary
