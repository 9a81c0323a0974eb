#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hkbary/closed_forms.hpp"
#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/kernels.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/quadrature.hpp"
#include "hkbary/summation.hpp"

namespace hkbary {

struct ObjectiveValue {
  double value = 0.0;
  // Kernel mass S_i seen by each input atom (discrete inputs only).
  std::vector<double> coverage;
};

struct Gradient {
  std::vector<double> d_mass;
  std::vector<Point> d_pos;
};

namespace detail {

// Integration breakpoints for the density path: every kernel kink of the
// candidate measure plus the edges of a uniform density.  The adaptive rule
// converges fast only on smooth panels, so all kinks become panel borders.
inline std::vector<double> density_breakpoints(const InputMeasure& rho,
                                               const ParticleMeasure& nu,
                                               const Kappa& kappa) {
  std::vector<double> pts;
  pts.reserve(2 * nu.size() + 2);
  const double r = kappa.reach();
  for (const Point& y : nu.positions) {
    pts.push_back(y[0] - r);
    pts.push_back(y[0] + r);
  }
  if (rho.density.kind == DensityKind::kUniform) {
    pts.push_back(rho.density.uniform.a);
    pts.push_back(rho.density.uniform.b);
  }
  return pts;
}

// Kernel mass of nu at x restricted to 1-d, plus per-atom kernel values.
inline double coverage_at(double x, const ParticleMeasure& nu, const Kappa& kappa,
                          std::span<double> kernels) {
  for (std::size_t j = 0; j < nu.size(); ++j)
    kernels[j] = cos2_kernel_at(std::fabs(x - nu.positions[j][0]), kappa);
  return pairwise_sum_terms(nu.size(),
                            [&](std::size_t j) { return nu.masses[j] * kernels[j]; });
}

struct EvalResult {
  ObjectiveValue objective;
  Gradient gradient;
};

// Shared core for the discrete input path.  with_gradient avoids paying for
// derivative bookkeeping inside line searches.
inline EvalResult eval_discrete(const InputMeasure& rho, const ParticleMeasure& nu,
                                const Kappa& kappa, bool with_gradient) {
  const std::size_t r = rho.atom_count();
  const std::size_t s = nu.size();
  EvalResult out;
  out.objective.coverage.resize(r);

  std::vector<double>& cov = out.objective.coverage;
  for (std::size_t i = 0; i < r; ++i)
    cov[i] = kernel_mass(rho.points[i], nu, kappa);

  const double transport = pairwise_sum_terms(
      r, [&](std::size_t i) { return rho.weights[i] * std::sqrt(cov[i]); });
  out.objective.value = 1.0 + nu.total_mass() - 2.0 * transport;

  if (!with_gradient) return out;

  out.gradient.d_mass.assign(s, 0.0);
  out.gradient.d_pos.assign(s, Point{0.0, 0.0});
  const int dim = nu.dim;
  for (std::size_t j = 0; j < s; ++j) {
    const Point& y = nu.positions[j];
    // Terms of input atoms that the candidate measure does not cover at all
    // are dropped: their kernel against every atom is handled by the
    // insertion machinery, not the gradient.
    out.gradient.d_mass[j] =
        1.0 - pairwise_sum_terms(r, [&](std::size_t i) {
          if (cov[i] <= 0.0) return 0.0;
          return rho.weights[i] * cos2_kernel(rho.points[i], y, dim, kappa) /
                 std::sqrt(cov[i]);
        });
    for (int k = 0; k < dim; ++k) {
      out.gradient.d_pos[j][k] = pairwise_sum_terms(r, [&](std::size_t i) {
        if (cov[i] <= 0.0) return 0.0;
        const double dist = distance(rho.points[i], y, dim);
        if (dist <= 0.0) return 0.0;
        const double sca = dist / kappa.value;
        const double cs = cos_trunc(sca) * sin_trunc(sca);
        if (cs == 0.0) return 0.0;
        return rho.weights[i] * 2.0 * nu.masses[j] * cs * (y[k] - rho.points[i][k]) /
               (kappa.value * dist * std::sqrt(cov[i]));
      });
    }
  }
  return out;
}

// Shared core for the 1-d density path; one adaptive pass integrates the
// objective integrand and, if asked, all gradient components at once.
inline EvalResult eval_density(const InputMeasure& rho, const ParticleMeasure& nu,
                               const Kappa& kappa, bool with_gradient) {
  const std::size_t s = nu.size();
  EvalResult out;
  const int m = with_gradient ? static_cast<int>(1 + 2 * s) : 1;
  std::vector<double> kernels(s), integrals(m);

  auto integrand = [&](double x, std::span<double> vals) {
    const double w = rho.density_at(x);
    const double S = coverage_at(x, nu, kappa, kernels);
    const double root = std::sqrt(S);
    vals[0] = w * root;
    if (!with_gradient) return;
    if (S <= 0.0 || w <= 0.0) {
      for (int c = 1; c < m; ++c) vals[c] = 0.0;
      return;
    }
    for (std::size_t j = 0; j < s; ++j) {
      vals[1 + j] = w * kernels[j] / root;
      const double dist = std::fabs(x - nu.positions[j][0]);
      const double sca = dist / kappa.value;
      const double cs = cos_trunc(sca) * sin_trunc(sca);
      vals[1 + s + j] = (dist > 0.0 && cs != 0.0)
                            ? w * 2.0 * nu.masses[j] * cs * (nu.positions[j][0] - x) /
                                  (kappa.value * dist * root)
                            : 0.0;
    }
  };

  const std::vector<double> pts = density_breakpoints(rho, nu, kappa);
  integrate_adaptive_vec(integrand, m, rho.domain.lower[0], rho.domain.upper[0], pts,
                         std::span<double>(integrals), rho.density.quad_tol);

  out.objective.value = 1.0 + nu.total_mass() - 2.0 * integrals[0];
  if (with_gradient) {
    out.gradient.d_mass.resize(s);
    out.gradient.d_pos.assign(s, Point{0.0, 0.0});
    for (std::size_t j = 0; j < s; ++j) {
      out.gradient.d_mass[j] = 1.0 - integrals[1 + j];
      out.gradient.d_pos[j][0] = integrals[1 + s + j];
    }
  }
  return out;
}

inline EvalResult eval_objective(const InputMeasure& rho, const ParticleMeasure& nu,
                                 const Kappa& kappa, bool with_gradient) {
  if (rho.dim() != nu.dim) throw InvalidInput("objective: dimension mismatch");
  return rho.is_density ? eval_density(rho, nu, kappa, with_gradient)
                        : eval_discrete(rho, nu, kappa, with_gradient);
}

}  // namespace detail

// Barycenter functional J(nu) = 1 + |nu| - 2 * integral of sqrt(S) d rho,
// where S is the kernel mass nu places around each input point.  Always
// finite; equals 1 for the zero measure.
inline ObjectiveValue objective(const InputMeasure& rho, const ParticleMeasure& nu,
                                const Kappa& kappa) {
  return detail::eval_objective(rho, nu, kappa, false).objective;
}

// Exact derivatives of the functional in each atom's mass and position.
inline Gradient gradient(const InputMeasure& rho, const ParticleMeasure& nu,
                         const Kappa& kappa) {
  return detail::eval_objective(rho, nu, kappa, true).gradient;
}

// Convex-combination check: J(t nu1 + (1-t) nu2) - t J(nu1) - (1-t) J(nu2),
// which can only be positive through numerical error.  The mixture is the
// atom-list concatenation with scaled masses.
inline double convexity_probe(const InputMeasure& rho, const ParticleMeasure& nu1,
                              const ParticleMeasure& nu2, double t, const Kappa& kappa) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("convexity probe needs t in [0, 1]");
  ParticleMeasure mix(nu1.dim);
  for (std::size_t j = 0; j < nu1.size(); ++j) mix.add_atom(nu1.positions[j], t * nu1.masses[j]);
  for (std::size_t j = 0; j < nu2.size(); ++j)
    mix.add_atom(nu2.positions[j], (1.0 - t) * nu2.masses[j]);
  const double jm = objective(rho, mix, kappa).value;
  const double j1 = objective(rho, nu1, kappa).value;
  const double j2 = objective(rho, nu2, kappa).value;
  return jm - t * j1 - (1.0 - t) * j2;
}

}  // namespace hkbary
