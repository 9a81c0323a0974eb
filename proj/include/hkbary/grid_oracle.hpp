#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/kernels.hpp"
#include "hkbary/measures.hpp"

namespace hkbary {

struct GridSolution {
  ParticleMeasure nodes;        // every grid node, including zero-mass ones
  double objective = 0.0;
  double stationarity = 0.0;    // max KKT residual over the node masses
  std::size_t iterations = 0;
  bool converged = false;
};

// Reference solver: fixes atoms on an equally spaced grid (grid_n nodes per
// axis) and minimises the barycenter functional over the masses alone, which
// is a convex problem.  Projected gradient with a Barzilai-Borwein step and
// an Armijo backtracking safeguard.  Discrete inputs only; this path is
// deliberately self-contained (its own kernel matrix, its own plain-loop
// sums) so it can serve as an independent check of the particle solver.
inline GridSolution solve_on_grid(const InputMeasure& rho, const Kappa& kappa, int grid_n,
                                  double tol = 1e-7, std::size_t max_iters = 20000) {
  if (rho.is_density)
    throw InvalidInput("the grid oracle handles discrete inputs only");
  if (grid_n < 2) throw InvalidInput("grid oracle needs at least 2 nodes per axis");

  const Domain& domain = rho.domain;
  const int dim = domain.dim;
  const std::size_t r = rho.atom_count();

  GridSolution sol;
  sol.nodes = ParticleMeasure(dim);
  if (dim == 1) {
    for (int g = 0; g < grid_n; ++g) {
      const double t = static_cast<double>(g) / (grid_n - 1);
      sol.nodes.add_atom(Point{domain.lower[0] + t * (domain.upper[0] - domain.lower[0]), 0.0},
                         0.0);
    }
  } else {
    for (int g1 = 0; g1 < grid_n; ++g1) {
      for (int g0 = 0; g0 < grid_n; ++g0) {
        const double t0 = static_cast<double>(g0) / (grid_n - 1);
        const double t1 = static_cast<double>(g1) / (grid_n - 1);
        sol.nodes.add_atom(
            Point{domain.lower[0] + t0 * (domain.upper[0] - domain.lower[0]),
                  domain.lower[1] + t1 * (domain.upper[1] - domain.lower[1])},
            0.0);
      }
    }
  }
  const std::size_t n = sol.nodes.size();

  // Kernel matrix K[i*n + k] between input atom i and node k.
  std::vector<double> K(r * n);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t k = 0; k < n; ++k)
      K[i * n + k] = cos2_kernel(rho.points[i], sol.nodes.positions[k], dim, kappa);
  }

  std::vector<double>& m = sol.nodes.masses;
  std::fill(m.begin(), m.end(), 1.0 / static_cast<double>(n));

  std::vector<double> S(r), g(n), m_new(n), g_new(n);
  auto eval = [&](const std::vector<double>& mass, std::vector<double>& Sout) {
    double total = 0.0;
    for (double v : mass) total += v;
    double transport = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += mass[k] * K[i * n + k];
      Sout[i] = s;
      transport += rho.weights[i] * std::sqrt(s);
    }
    return 1.0 + total - 2.0 * transport;
  };
  auto grad = [&](const std::vector<double>& Sin, std::vector<double>& gout) {
    std::fill(gout.begin(), gout.end(), 1.0);
    for (std::size_t i = 0; i < r; ++i) {
      if (Sin[i] <= 0.0) continue;  // uncovered input: fixed by the bump below
      const double w = rho.weights[i] / std::sqrt(Sin[i]);
      for (std::size_t k = 0; k < n; ++k) gout[k] -= w * K[i * n + k];
    }
  };
  auto residual = [&](const std::vector<double>& mass, const std::vector<double>& gin) {
    double res = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = mass[k] > 0.0 ? std::fabs(gin[k]) : std::max(0.0, -gin[k]);
      res = std::max(res, v);
    }
    return res;
  };
  // Keeps every input atom covered: an exact zero of S_i parks the gradient
  // in a spurious corner, so nudge the closest node back to life.
  auto bump_uncovered = [&]() {
    bool bumped = false;
    for (std::size_t i = 0; i < r; ++i) {
      if (S[i] > 0.0) continue;
      double best_k = -1.0;
      std::size_t arg = n;
      for (std::size_t k = 0; k < n; ++k) {
        if (K[i * n + k] > best_k) {
          best_k = K[i * n + k];
          arg = k;
        }
      }
      if (arg < n && best_k > 0.0) {
        m[arg] = std::max(m[arg], 1e-6);
        bumped = true;
      }
    }
    return bumped;
  };

  double J = eval(m, S);
  grad(S, g);
  double step = 1.0;
  const double c1 = 1e-4;

  for (sol.iterations = 0; sol.iterations < max_iters; ++sol.iterations) {
    sol.stationarity = residual(m, g);
    if (sol.stationarity <= tol) {
      if (!bump_uncovered()) {
        sol.converged = true;
        break;
      }
      J = eval(m, S);
      grad(S, g);
      continue;
    }

    // Backtracking from the (safeguarded) Barzilai-Borwein step.
    double t = std::clamp(step, 1e-14, 1e8);
    bool accepted = false;
    for (int halve = 0; halve < 60; ++halve) {
      double decrease = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        m_new[k] = std::max(0.0, m[k] - t * g[k]);
        decrease += g[k] * (m_new[k] - m[k]);
      }
      const double J_new = eval(m_new, S);
      // The rounding slack keeps the search alive once predicted decreases
      // drop below the objective's floating-point resolution; the gradient
      // residual can still be polished there even though J is bit-frozen.
      const double fp_slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(J));
      if (J_new <= J + c1 * decrease + fp_slack && decrease <= 0.0) {
        grad(S, g_new);
        // BB1 step from the accepted move.
        double ss = 0.0, sy = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double sk = m_new[k] - m[k];
          ss += sk * sk;
          sy += sk * (g_new[k] - g[k]);
        }
        step = (sy > 1e-300) ? ss / sy : t * 2.0;
        m.swap(m_new);
        g.swap(g_new);
        J = J_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Could not make progress at any safeguarded step: treat the current
      // point as the answer; the stationarity field reports how far off it is.
      break;
    }
  }

  sol.objective = J;
  return sol;
}

}  // namespace hkbary
