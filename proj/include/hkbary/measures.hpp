#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/normal.hpp"
#include "hkbary/summation.hpp"

namespace hkbary {

// Finite nonnegative atomic measure: the solver's candidate barycenter.
// Zero-mass atoms are legal transient states during optimisation; normalized()
// strips them before a measure is reported.
struct ParticleMeasure {
  int dim = 1;
  std::vector<Point> positions;
  std::vector<double> masses;

  ParticleMeasure() = default;
  explicit ParticleMeasure(int dim) : dim(dim) {}

  std::size_t size() const { return masses.size(); }
  bool empty() const { return masses.empty(); }

  void add_atom(const Point& p, double mass) {
    positions.push_back(p);
    masses.push_back(mass);
  }

  double total_mass() const { return pairwise_sum(masses); }

  // Drops zero-mass atoms.  Atom order is otherwise preserved.
  ParticleMeasure normalized() const {
    ParticleMeasure out(dim);
    for (std::size_t j = 0; j < size(); ++j) {
      if (masses[j] > 0.0) out.add_atom(positions[j], masses[j]);
    }
    return out;
  }

  void validate(const Domain& domain) const {
    if (dim != domain.dim) throw InvalidInput("particle measure dimension mismatch");
    if (positions.size() != masses.size())
      throw InvalidInput("particle measure has mismatched positions/masses");
    for (std::size_t j = 0; j < size(); ++j) {
      if (!std::isfinite(masses[j]) || masses[j] < 0.0)
        throw InvalidInput("particle mass must be finite and >= 0, got " +
                           std::to_string(masses[j]));
      if (!std::isfinite(positions[j][0]) || !std::isfinite(positions[j][1]) ||
          !domain.contains(positions[j]))
        throw InvalidInput("particle position outside the domain");
    }
  }
};

// One-dimensional density specifications for the continuum input path.
struct UniformDensity {
  double a = 0.0;
  double b = 1.0;
};

struct GaussianMixtureDensity {
  std::vector<double> means;
  std::vector<double> stddevs;
  std::vector<double> weights;  // positive, summing to 1
};

enum class DensityKind { kUniform, kGaussianMixture };

struct Density1D {
  DensityKind kind = DensityKind::kUniform;
  UniformDensity uniform;
  GaussianMixtureDensity mixture;
  // Absolute tolerance handed to the adaptive quadrature.
  double quad_tol = 1e-10;
};

namespace detail {

// Unnormalised density value at x (ignoring the domain restriction).
inline double raw_density(const Density1D& d, double x) {
  if (d.kind == DensityKind::kUniform) {
    const auto& u = d.uniform;
    return (x >= u.a && x <= u.b) ? 1.0 / (u.b - u.a) : 0.0;
  }
  const auto& m = d.mixture;
  double s = 0.0;
  for (std::size_t k = 0; k < m.means.size(); ++k)
    s += m.weights[k] / m.stddevs[k] * normal_pdf((x - m.means[k]) / m.stddevs[k]);
  return s;
}

// Unnormalised mass of [l, r].
inline double raw_interval_mass(const Density1D& d, double l, double r) {
  if (r <= l) return 0.0;
  if (d.kind == DensityKind::kUniform) {
    const auto& u = d.uniform;
    const double overlap = std::min(r, u.b) - std::max(l, u.a);
    return overlap > 0.0 ? overlap / (u.b - u.a) : 0.0;
  }
  const auto& m = d.mixture;
  double s = 0.0;
  for (std::size_t k = 0; k < m.means.size(); ++k) {
    const double zl = (l - m.means[k]) / m.stddevs[k];
    const double zr = (r - m.means[k]) / m.stddevs[k];
    s += m.weights[k] * (normal_cdf(zr) - normal_cdf(zl));
  }
  return s;
}

// Unnormalised first moment of [l, r]: integral of x * density(x) dx.
inline double raw_interval_moment(const Density1D& d, double l, double r) {
  if (r <= l) return 0.0;
  if (d.kind == DensityKind::kUniform) {
    const auto& u = d.uniform;
    const double lo = std::max(l, u.a), hi = std::min(r, u.b);
    if (hi <= lo) return 0.0;
    return 0.5 * (hi * hi - lo * lo) / (u.b - u.a);
  }
  const auto& m = d.mixture;
  double s = 0.0;
  for (std::size_t k = 0; k < m.means.size(); ++k) {
    const double mu = m.means[k], sg = m.stddevs[k];
    const double zl = (l - mu) / sg, zr = (r - mu) / sg;
    // E[X; l<=X<=r] for X ~ N(mu, sg^2).
    s += m.weights[k] *
         (mu * (normal_cdf(zr) - normal_cdf(zl)) - sg * (normal_pdf(zr) - normal_pdf(zl)));
  }
  return s;
}

}  // namespace detail

// The fixed input measure rho: either a finite list of weighted atoms or a
// 1-d density.  Always a probability measure on its domain; densities are
// restricted to the domain and renormalised on construction.
struct InputMeasure {
  Domain domain;
  bool is_density = false;

  // Discrete path.
  std::vector<Point> points;
  std::vector<double> weights;

  // Density path (domain.dim == 1 only).
  Density1D density;
  double density_norm = 1.0;  // 1 / (raw density mass inside the domain)

  int dim() const { return domain.dim; }
  std::size_t atom_count() const { return points.size(); }

  static InputMeasure discrete(const Domain& domain, std::vector<Point> points,
                               std::vector<double> weights, bool normalize_weights = false) {
    InputMeasure rho;
    rho.domain = domain;
    rho.is_density = false;
    rho.points = std::move(points);
    rho.weights = std::move(weights);
    if (rho.points.empty() || rho.points.size() != rho.weights.size())
      throw InvalidInput("discrete input needs matching, nonempty points and weights");
    for (std::size_t i = 0; i < rho.points.size(); ++i) {
      if (!std::isfinite(rho.weights[i]) || rho.weights[i] <= 0.0)
        throw InvalidInput("input weights must be finite and > 0");
      if (!domain.contains(rho.points[i]))
        throw InvalidInput("input point " + std::to_string(i) + " outside the domain");
    }
    const double total = pairwise_sum(rho.weights);
    if (normalize_weights) {
      for (double& w : rho.weights) w /= total;
    } else if (std::fabs(total - 1.0) > 1e-12) {
      throw InvalidInput("input weights must sum to 1 (got " + std::to_string(total) +
                         "); enable weight normalization to accept proportional weights");
    }
    return rho;
  }

  static InputMeasure density1d(const Domain& domain, Density1D density) {
    if (domain.dim != 1) throw InvalidInput("density inputs are 1-d only");
    InputMeasure rho;
    rho.domain = domain;
    rho.is_density = true;
    rho.density = std::move(density);
    if (rho.density.kind == DensityKind::kUniform) {
      const auto& u = rho.density.uniform;
      if (!(u.a < u.b)) throw InvalidInput("uniform density needs a < b");
    } else {
      const auto& m = rho.density.mixture;
      if (m.means.empty() || m.means.size() != m.stddevs.size() ||
          m.means.size() != m.weights.size())
        throw InvalidInput("gaussian mixture needs matching means/stddevs/weights");
      double wsum = 0.0;
      for (std::size_t k = 0; k < m.means.size(); ++k) {
        if (!(m.stddevs[k] > 0.0)) throw InvalidInput("mixture stddevs must be > 0");
        if (!(m.weights[k] > 0.0)) throw InvalidInput("mixture weights must be > 0");
        wsum += m.weights[k];
      }
      if (std::fabs(wsum - 1.0) > 1e-12)
        throw InvalidInput("mixture weights must sum to 1");
    }
    if (!(rho.density.quad_tol > 0.0)) throw InvalidInput("quadrature tolerance must be > 0");
    const double inside =
        detail::raw_interval_mass(rho.density, domain.lower[0], domain.upper[0]);
    if (!(inside > 0.0))
      throw InvalidInput("density support does not meet the domain");
    rho.density_norm = 1.0 / inside;
    return rho;
  }

  // Density value at x inside the domain (0 outside); density path only.
  double density_at(double x) const {
    if (x < domain.lower[0] || x > domain.upper[0]) return 0.0;
    return density_norm * detail::raw_density(density, x);
  }

  // Mass of the interval [l, r] intersected with the domain.
  double interval_mass(double l, double r) const {
    l = std::max(l, domain.lower[0]);
    r = std::min(r, domain.upper[0]);
    return density_norm * detail::raw_interval_mass(density, l, r);
  }

  // Barycentre (mean position) of the measure.
  Point mean() const {
    if (!is_density) {
      Point m{0.0, 0.0};
      for (int k = 0; k < domain.dim; ++k) {
        m[k] = pairwise_sum_terms(points.size(),
                                  [&](std::size_t i) { return weights[i] * points[i][k]; });
      }
      return m;
    }
    const double m1 =
        density_norm *
        detail::raw_interval_moment(density, domain.lower[0], domain.upper[0]);
    return Point{m1, 0.0};
  }
};

}  // namespace hkbary
