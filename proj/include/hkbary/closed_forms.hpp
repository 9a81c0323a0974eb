#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/kernels.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/quadrature.hpp"
#include "hkbary/summation.hpp"

namespace hkbary {

// Integral of the transport kernel centred at x against nu.
inline double kernel_mass(const Point& x, const ParticleMeasure& nu, const Kappa& kappa) {
  return pairwise_sum_terms(nu.size(), [&](std::size_t j) {
    return nu.masses[j] * cos2_kernel(x, nu.positions[j], nu.dim, kappa);
  });
}

// Squared distance between the Dirac m*delta_x and nu.  Closed form: the
// only coupling freedom is how much of each nu-atom pairs with the Dirac,
// and that collapses to a single kernel integral.
inline double hk2_dirac(double m, const Point& x, const ParticleMeasure& nu,
                        const Kappa& kappa) {
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("dirac mass must be positive");
  if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
    throw InvalidInput("dirac location must be finite");
  for (double mass : nu.masses) {
    if (!std::isfinite(mass) || mass < 0.0) throw InvalidInput("nu has an invalid mass");
  }
  const double integral = kernel_mass(x, nu, kappa);
  return m + nu.total_mass() - 2.0 * std::sqrt(m) * std::sqrt(integral);
}

// Second marginal of the optimal semicoupling for hk2_dirac: nu reweighted by
// the kernel and scaled so its total mass is sqrt(m * kernel_mass).  When nu
// is entirely out of reach there is no transport and sigma is zero.
inline ParticleMeasure semicoupling_sigma(double m, const Point& x, const ParticleMeasure& nu,
                                          const Kappa& kappa) {
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("dirac mass must be positive");
  const double integral = kernel_mass(x, nu, kappa);
  ParticleMeasure sigma(nu.dim);
  if (integral <= 0.0) return sigma;
  const double scale = std::sqrt(m / integral);
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const double w = nu.masses[j] * cos2_kernel(x, nu.positions[j], nu.dim, kappa);
    if (w > 0.0) sigma.add_atom(nu.positions[j], scale * w);
  }
  return sigma;
}

namespace detail {

// Atoms aggregated by exact position; the measure-level view of a particle
// list that may repeat coordinates.
inline std::map<std::pair<double, double>, double> atom_map(const ParticleMeasure& mu) {
  std::map<std::pair<double, double>, double> out;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (mu.masses[j] != 0.0) out[{mu.positions[j][0], mu.positions[j][1]}] += mu.masses[j];
  }
  return out;
}

}  // namespace detail

// Squared Hellinger distance between purely atomic measures; atoms match only
// on exactly equal coordinates.
inline double hellinger2_atomic(const ParticleMeasure& mu, const ParticleMeasure& nu) {
  const auto ma = detail::atom_map(mu);
  const auto mb = detail::atom_map(nu);
  std::vector<double> terms;
  terms.reserve(ma.size() + mb.size());
  auto ia = ma.begin();
  auto ib = mb.begin();
  while (ia != ma.end() || ib != mb.end()) {
    if (ib == mb.end() || (ia != ma.end() && ia->first < ib->first)) {
      terms.push_back(ia->second);
      ++ia;
    } else if (ia == ma.end() || ib->first < ia->first) {
      terms.push_back(ib->second);
      ++ib;
    } else {
      const double d = std::sqrt(ia->second) - std::sqrt(ib->second);
      terms.push_back(d * d);
      ++ia;
      ++ib;
    }
  }
  return pairwise_sum(terms);
}

// Barycenter in the vanishing-length-scale limit: atoms become mutually
// blind, each input atom of weight w contributes mass w^2 at its own
// location, and any diffuse part contributes nothing.
inline ParticleMeasure hellinger_barycenter(const InputMeasure& rho) {
  ParticleMeasure nu(rho.dim());
  if (rho.is_density) return nu;
  const auto atoms = detail::atom_map([&] {
    ParticleMeasure tmp(rho.dim());
    for (std::size_t i = 0; i < rho.atom_count(); ++i)
      tmp.add_atom(rho.points[i], rho.weights[i]);
    return tmp;
  }());
  for (const auto& [pos, w] : atoms) nu.add_atom(Point{pos.first, pos.second}, w * w);
  return nu;
}

// Barycenter in the large-length-scale limit: a unit Dirac at the mean.
inline ParticleMeasure wasserstein_limit_barycenter(const InputMeasure& rho) {
  ParticleMeasure nu(rho.dim());
  nu.add_atom(rho.mean(), 1.0);
  return nu;
}

namespace detail {

// Golden-section maximisation of f on [a, b] (unimodal assumed near the
// bracket; used only to polish grid maxima).
template <class F>
double golden_max(F&& f, double a, double b, int iters) {
  static const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace detail

// Largest mass rho places on any ball of radius kappa*pi/2.  For discrete
// inputs this is exact in 1-d (window sweep anchored at atoms) and an
// axis-aligned square over-approximation in 2-d; for densities a grid sweep
// with golden-section polish plus a small safety margin.  Only ever used as
// an upper bound, so over-approximating is fine.
inline double concentration_bound(const InputMeasure& rho, const Kappa& kappa) {
  const double r = kappa.reach();
  if (!rho.is_density) {
    const std::size_t n = rho.atom_count();
    if (rho.dim() == 1) {
      std::vector<std::pair<double, double>> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = {rho.points[i][0], rho.weights[i]};
      std::sort(a.begin(), a.end());
      double best = 0.0;
      std::size_t hi = 0;
      double window = 0.0;
      for (std::size_t lo = 0; lo < n; ++lo) {
        while (hi < n && a[hi].first <= a[lo].first + 2.0 * r) window += a[hi++].second;
        best = std::max(best, window);
        window -= a[lo].second;
      }
      return best;
    }
    // 2-d: best axis-aligned square of side 2r, left/bottom edges anchored at
    // atom coordinates.
    std::vector<std::size_t> by_x(n);
    for (std::size_t i = 0; i < n; ++i) by_x[i] = i;
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t i, std::size_t j) {
      return rho.points[i][0] < rho.points[j][0];
    });
    double best = 0.0;
    for (std::size_t lo = 0; lo < n; ++lo) {
      const double lx = rho.points[by_x[lo]][0];
      std::vector<std::pair<double, double>> strip;
      for (std::size_t k = lo; k < n; ++k) {
        const std::size_t i = by_x[k];
        if (rho.points[i][0] > lx + 2.0 * r) break;
        strip.push_back({rho.points[i][1], rho.weights[i]});
      }
      std::sort(strip.begin(), strip.end());
      std::size_t hi = 0;
      double window = 0.0;
      for (std::size_t s = 0; s < strip.size(); ++s) {
        while (hi < strip.size() && strip[hi].first <= strip[s].first + 2.0 * r)
          window += strip[hi++].second;
        best = std::max(best, window);
        window -= strip[s].second;
      }
    }
    return best;
  }

  // Density path.
  if (rho.density.kind == DensityKind::kUniform) {
    const auto& u = rho.density.uniform;
    const double lo = std::max(u.a, rho.domain.lower[0]);
    const double hi = std::min(u.b, rho.domain.upper[0]);
    return rho.density_norm * std::min(2.0 * r, hi - lo) / (u.b - u.a);
  }
  auto window_mass = [&](double y) { return rho.interval_mass(y - r, y + r); };
  const double lo = rho.domain.lower[0], hi = rho.domain.upper[0];
  const int grid_n = 4001;
  std::vector<double> val(grid_n);
  double best = 0.0;
  for (int g = 0; g < grid_n; ++g) {
    const double y = lo + (hi - lo) * g / (grid_n - 1);
    val[g] = window_mass(y);
    best = std::max(best, val[g]);
  }
  // Polish every grid-local maximum that is anywhere near the champion.
  const double h = (hi - lo) / (grid_n - 1);
  for (int g = 0; g < grid_n; ++g) {
    const bool local_max = (g == 0 || val[g] >= val[g - 1]) &&
                           (g == grid_n - 1 || val[g] >= val[g + 1]);
    if (local_max && val[g] >= best - 1e-3) {
      const double y = lo + (hi - lo) * g / (grid_n - 1);
      best = std::max(best, detail::golden_max(window_mass, std::max(lo, y - h),
                                               std::min(hi, y + h), 40));
    }
  }
  return best + 1e-9;
}

// L1 mass of the squared kernel profile in R^d; the constant in the
// small-length-scale mass law.  d = 1 is analytic; d = 2 is the radial
// integral 2*pi*int_0^{pi/2} cos(r)^2 r dr, evaluated once and cached.
inline double cd_constant(int d) {
  if (d == 1) return kHalfPi;
  if (d != 2) throw InvalidInput("cd_constant supports d in {1, 2}");
  static const double c2 = [] {
    auto f = [](double rr) {
      const double c = cos_trunc(rr);
      return c * c * rr;
    };
    const QuadratureResult q =
        integrate_adaptive(f, 0.0, kHalfPi, std::span<const double>{}, 1e-14);
    return 2.0 * kPi * q.value;
  }();
  return c2;
}

}  // namespace hkbary
