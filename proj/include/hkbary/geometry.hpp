#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hkbary/errors.hpp"

namespace hkbary {

inline constexpr double kPi = std::numbers::pi_v<double>;
inline constexpr double kHalfPi = kPi / 2.0;

// A point in R^d with d in {1, 2}.  The second coordinate is 0 for d = 1.
using Point = std::array<double, 2>;

inline Point make_point(double x0, double x1 = 0.0) { return Point{x0, x1}; }

// Euclidean distance.  hypot keeps full precision for the tiny differences
// that show up right at the kernel truncation radius.
inline double distance(const Point& a, const Point& b, int dim) {
  if (dim == 1) return std::fabs(a[0] - b[0]);
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Length scale of the metric.  Strong type so a mass can never be passed
// where a length scale is expected.
struct Kappa {
  double value;

  explicit Kappa(double v) : value(v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidInput("kappa must be positive and finite, got " + std::to_string(v));
  }

  // Radius beyond which no mass is transported.
  double reach() const { return value * kHalfPi; }
};

// Compact axis-aligned box, the common domain of all measures in a problem.
struct Domain {
  int dim = 1;
  Point lower{0.0, 0.0};
  Point upper{1.0, 1.0};

  Domain() = default;
  Domain(int dim, Point lower, Point upper) : dim(dim), lower(lower), upper(upper) {
    if (dim != 1 && dim != 2) throw InvalidInput("domain dimension must be 1 or 2");
    for (int k = 0; k < dim; ++k) {
      if (!(lower[k] < upper[k]) || !std::isfinite(lower[k]) || !std::isfinite(upper[k]))
        throw InvalidInput("domain must satisfy lower < upper with finite bounds");
    }
  }

  static Domain unit_interval() { return Domain(1, {0.0, 0.0}, {1.0, 0.0}); }
  static Domain unit_square() { return Domain(2, {0.0, 0.0}, {1.0, 1.0}); }

  bool contains(const Point& p) const {
    for (int k = 0; k < dim; ++k) {
      if (p[k] < lower[k] || p[k] > upper[k]) return false;
    }
    return true;
  }

  Point clamp(Point p) const {
    for (int k = 0; k < dim; ++k) {
      if (p[k] < lower[k]) p[k] = lower[k];
      if (p[k] > upper[k]) p[k] = upper[k];
    }
    for (int k = dim; k < 2; ++k) p[k] = 0.0;
    return p;
  }

  double diameter() const {
    return distance(lower, upper, dim);
  }
};

}  // namespace hkbary
