#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/kernels.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/objective.hpp"
#include "hkbary/quadrature.hpp"
#include "hkbary/summation.hpp"

namespace hkbary {

// Dual potential of the kernel form psi(x) = 1 - sqrt(S(x)), S the kernel
// mass of the generator measure around x.  This is the ansatz the optimality
// conditions single out, so certificates only ever need this family.
struct DualPotential {
  ParticleMeasure generator;
  Kappa kappa;
};

inline double psi_eval(const DualPotential& psi, const Point& x) {
  return 1.0 - std::sqrt(kernel_mass(x, psi.generator, psi.kappa));
}

// Value of the rescaled potential 1 - s * (1 - psi).
inline double psi_eval_rescaled(const DualPotential& psi, double s, const Point& x) {
  return 1.0 - s * (1.0 - psi_eval(psi, x));
}

namespace detail {

[[noreturn]] inline void throw_uncovered(const Point& x, int dim) {
  throw UncoveredInputError("input mass at (" + std::to_string(x[0]) +
                                (dim == 2 ? ", " + std::to_string(x[1]) : std::string()) +
                                ") has no generator atom within the kernel radius",
                            x[0], x[1], dim);
}

}  // namespace detail

// Constraint function F(y) = integral of cos2_kernel(x, y) / (1 - psi(x))
// d rho(x).  Terms whose kernel vanishes contribute 0 even where 1 - psi = 0;
// a positive kernel against uncovered input mass raises UncoveredInputError.
inline double constraint_F(const InputMeasure& rho, const DualPotential& psi, const Point& y) {
  if (!rho.is_density) {
    return pairwise_sum_terms(rho.atom_count(), [&](std::size_t i) {
      const double k = cos2_kernel(rho.points[i], y, rho.dim(), psi.kappa);
      if (k == 0.0) return 0.0;
      const double S = kernel_mass(rho.points[i], psi.generator, psi.kappa);
      if (S <= 0.0) detail::throw_uncovered(rho.points[i], rho.dim());
      return rho.weights[i] * k / std::sqrt(S);
    });
  }
  const double r = psi.kappa.reach();
  const double lo = std::max(rho.domain.lower[0], y[0] - r);
  const double hi = std::min(rho.domain.upper[0], y[0] + r);
  if (!(lo < hi)) return 0.0;
  std::vector<double> kernels(psi.generator.size());
  auto integrand = [&](double x) {
    const double k = cos2_kernel_at(std::fabs(x - y[0]), psi.kappa);
    if (k == 0.0) return 0.0;
    const double w = rho.density_at(x);
    if (w == 0.0) return 0.0;
    const double S = detail::coverage_at(x, psi.generator, psi.kappa, std::span<double>(kernels));
    if (S <= 0.0) detail::throw_uncovered(Point{x, 0.0}, 1);
    return w * k / std::sqrt(S);
  };
  const std::vector<double> pts = detail::density_breakpoints(rho, psi.generator, psi.kappa);
  return integrate_adaptive(integrand, lo, hi, pts, rho.density.quad_tol).value;
}

// Certified Lipschitz constant of F: (1/kappa) * integral of d rho / (1 - psi).
// Valid because the squared-cosine profile has slope at most 1 in |s|.
inline double lipschitz_bound(const InputMeasure& rho, const DualPotential& psi) {
  if (!rho.is_density) {
    const double sum = pairwise_sum_terms(rho.atom_count(), [&](std::size_t i) {
      const double S = kernel_mass(rho.points[i], psi.generator, psi.kappa);
      if (S <= 0.0) detail::throw_uncovered(rho.points[i], rho.dim());
      return rho.weights[i] / std::sqrt(S);
    });
    return sum / psi.kappa.value;
  }
  std::vector<double> kernels(psi.generator.size());
  auto integrand = [&](double x) {
    const double w = rho.density_at(x);
    if (w == 0.0) return 0.0;
    const double S = detail::coverage_at(x, psi.generator, psi.kappa, std::span<double>(kernels));
    if (S <= 0.0) detail::throw_uncovered(Point{x, 0.0}, 1);
    return w / std::sqrt(S);
  };
  const std::vector<double> pts = detail::density_breakpoints(rho, psi.generator, psi.kappa);
  const double sum = integrate_adaptive(integrand, rho.domain.lower[0], rho.domain.upper[0],
                                        pts, rho.density.quad_tol)
                         .value;
  return sum / psi.kappa.value;
}

struct ScanResult {
  double max_f = 0.0;
  Point argmax{0.0, 0.0};
  double grid_spacing = 0.0;
  // Polished grid-local maxima with F > 1, best first; ties broken towards
  // the lexicographically smaller location.  Feeds particle insertion.
  std::vector<std::pair<Point, double>> local_maxima;
};

namespace detail {

inline bool lex_less(const Point& a, const Point& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  return a[1] < b[1];
}

// Cached evaluator of F for one fixed potential.  Discrete inputs get their
// denominators precomputed and their atoms sorted for windowed sums; the sum
// order is the sorted order, fixed by (coordinate, input index).
class FEvaluator {
 public:
  FEvaluator(const InputMeasure& rho, const DualPotential& psi) : rho_(rho), psi_(psi) {
    if (rho.is_density) {
      breakpoints_ = density_breakpoints(rho, psi.generator, psi.kappa);
      kernels_.resize(psi.generator.size());
      return;
    }
    const std::size_t n = rho.atom_count();
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      if (rho.points[a][0] != rho.points[b][0]) return rho.points[a][0] < rho.points[b][0];
      return a < b;
    });
    xs_.resize(n);
    pts_.resize(n);
    wts_.resize(n);
    covered_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order_[k];
      xs_[k] = rho.points[i][0];
      pts_[k] = rho.points[i];
      const double S = kernel_mass(rho.points[i], psi.generator, psi.kappa);
      covered_[k] = S > 0.0;
      wts_[k] = covered_[k] ? rho.weights[i] / std::sqrt(S) : rho.weights[i];
    }
  }

  double operator()(const Point& y) const {
    const double r = psi_.kappa.reach();
    if (!rho_.is_density) {
      const auto lo = std::lower_bound(xs_.begin(), xs_.end(), y[0] - r) - xs_.begin();
      const auto hi = std::upper_bound(xs_.begin(), xs_.end(), y[0] + r) - xs_.begin();
      terms_.clear();
      for (std::size_t k = lo; k < static_cast<std::size_t>(hi); ++k) {
        const double kern = cos2_kernel(pts_[k], y, rho_.dim(), psi_.kappa);
        if (kern == 0.0) continue;
        if (!covered_[k]) throw_uncovered(pts_[k], rho_.dim());
        terms_.push_back(wts_[k] * kern);
      }
      return pairwise_sum(terms_);
    }
    const double lo = std::max(rho_.domain.lower[0], y[0] - r);
    const double hi = std::min(rho_.domain.upper[0], y[0] + r);
    if (!(lo < hi)) return 0.0;
    auto integrand = [&](double x) {
      const double k = cos2_kernel_at(std::fabs(x - y[0]), psi_.kappa);
      if (k == 0.0) return 0.0;
      const double w = rho_.density_at(x);
      if (w == 0.0) return 0.0;
      const double S = coverage_at(x, psi_.generator, psi_.kappa,
                                   std::span<double>(kernels_));
      if (S <= 0.0) throw_uncovered(Point{x, 0.0}, 1);
      return w * k / std::sqrt(S);
    };
    return integrate_adaptive(integrand, lo, hi, breakpoints_, rho_.density.quad_tol).value;
  }

 private:
  const InputMeasure& rho_;
  const DualPotential& psi_;
  // Discrete cache.
  std::vector<std::size_t> order_;
  std::vector<double> xs_;
  std::vector<Point> pts_;
  std::vector<double> wts_;
  std::vector<char> covered_;
  mutable std::vector<double> terms_;
  // Density cache.
  std::vector<double> breakpoints_;
  mutable std::vector<double> kernels_;
};

// Golden-section polish of a local maximum; returns (argmax, value).
template <class F>
std::pair<double, double> golden_max_arg(F&& f, double a, double b, int iters) {
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
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

inline std::pair<Point, double> polish_max(const FEvaluator& f, const Domain& domain,
                                           Point seed, double h, int iters) {
  if (domain.dim == 1) {
    auto g = [&](double y) { return f(Point{y, 0.0}); };
    const double a = std::max(domain.lower[0], seed[0] - h);
    const double b = std::min(domain.upper[0], seed[0] + h);
    auto [y, v] = golden_max_arg(g, a, b, iters);
    return {Point{y, 0.0}, v};
  }
  // Coordinate-wise polish; two passes of half the budget per axis.
  Point p = seed;
  double best = f(p);
  for (int pass = 0; pass < 2; ++pass) {
    for (int axis = 0; axis < 2; ++axis) {
      auto g = [&](double t) {
        Point q = p;
        q[axis] = t;
        return f(q);
      };
      const double a = std::max(domain.lower[axis], p[axis] - h);
      const double b = std::min(domain.upper[axis], p[axis] + h);
      auto [t, v] = golden_max_arg(g, a, b, iters / 4);
      if (v >= best) {
        best = v;
        p[axis] = t;
      }
    }
  }
  return {p, best};
}

struct RefineResult {
  double bound = std::numeric_limits<double>::infinity();  // certified sup F bound
  double max_f = -1.0;                                     // best value actually seen
  Point argmax{0.0, 0.0};
  std::size_t evaluations = 0;
};

// Tightens the certified bound for sup F by adaptive cell splitting.  Every
// point of a cell lies within half the cell diameter of an evaluated corner,
// so  max(corner values) + L * diam / 2  bounds F over the cell.  Splitting
// only the cell with the worst bound concentrates the fine resolution around
// the near-active peaks of F, which is what makes tight certificates cheap:
// a flat scan would need the peak resolution everywhere.
inline RefineResult refine_sup_bound(const InputMeasure& rho, const DualPotential& psi,
                                     double lipschitz, double delta, double target_slack,
                                     std::size_t max_evaluations) {
  const Domain& domain = rho.domain;
  const FEvaluator f(rho, psi);
  RefineResult out;
  auto note_max = [&](const Point& y, double v) {
    if (v > out.max_f || (v == out.max_f && lex_less(y, out.argmax))) {
      out.max_f = v;
      out.argmax = y;
    }
  };
  auto eval = [&](const Point& y) {
    const double v = f(y);
    ++out.evaluations;
    note_max(y, v);
    return v;
  };
  // Cells whose bound is already within target_slack of the running lower
  // bound are final: shrinking them further cannot move the certificate by
  // more than the slack.  The rescale factor inherits this precision, which
  // keeps the rescaled dual value sharp even for infeasible potentials.
  auto target = [&] { return std::max(1.0, out.max_f) + target_slack; };
  double frozen = -1.0;  // bound over cells too small to split further

  // Second-order cell bound.  Every kernel term cos^2(|x - y| / kappa) has
  // directional second derivative bounded by 2 / kappa^2 (and is C^1 at the
  // truncation radius), so F' is Lipschitz with constant
  // (2 / kappa^2) * integral d rho / sqrt(S) = 2 * lipschitz / kappa.  For a
  // function with |f''| <= M on a convex cell, the chord argument gives
  // max over the cell <= max(corner values) + M * diam^2 / 8.  This quadratic
  // bound takes over from the linear Lipschitz bound on wide, flat,
  // near-active plateaus (continuum active sets), where the linear bound
  // alone would need millions of cells to certify.
  const double curvature = 2.0 * lipschitz / psi.kappa.value;
  auto excess = [&](double diam) {
    return std::min(lipschitz * 0.5 * diam, curvature * diam * diam / 8.0);
  };

  if (domain.dim == 1) {
    struct Cell {
      double lo, hi, vlo, vhi, bound;
    };
    auto make = [&](double lo, double hi, double vlo, double vhi) {
      return Cell{lo, hi, vlo, vhi, std::max(vlo, vhi) + excess(hi - lo)};
    };
    auto worse = [](const Cell& a, const Cell& b) {
      if (a.bound != b.bound) return a.bound < b.bound;
      return a.lo > b.lo;
    };
    std::priority_queue<Cell, std::vector<Cell>, decltype(worse)> heap(worse);
    const double lo = domain.lower[0], hi = domain.upper[0];
    const std::size_t n = std::min<std::size_t>(
        200000, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / delta))));
    const double h = (hi - lo) / static_cast<double>(n);
    double vprev = eval(Point{lo, 0.0});
    for (std::size_t g = 1; g <= n; ++g) {
      const double x = (g == n) ? hi : lo + h * static_cast<double>(g);
      const double v = eval(Point{x, 0.0});
      heap.push(make(x - h, x, vprev, v));
      vprev = v;
    }
    while (!heap.empty()) {
      const Cell c = heap.top();
      if (c.bound <= target() || out.evaluations >= max_evaluations) break;
      heap.pop();
      const double mid = 0.5 * (c.lo + c.hi);
      if (!(mid > c.lo && mid < c.hi)) {  // cell at floating-point resolution
        frozen = std::max(frozen, c.bound);
        continue;
      }
      const double vm = eval(Point{mid, 0.0});
      heap.push(make(c.lo, mid, c.vlo, vm));
      heap.push(make(mid, c.hi, vm, c.vhi));
    }
    out.bound = std::max({frozen, out.max_f, heap.empty() ? -1.0 : heap.top().bound});
  } else {
    struct Cell {
      double lo0, lo1, hi0, hi1;
      std::array<double, 4> v;  // corners: (lo0,lo1) (hi0,lo1) (lo0,hi1) (hi0,hi1)
      double bound;
    };
    auto make = [&](double lo0, double lo1, double hi0, double hi1, std::array<double, 4> v) {
      const double diam = std::hypot(hi0 - lo0, hi1 - lo1);
      const double top = std::max(std::max(v[0], v[1]), std::max(v[2], v[3]));
      return Cell{lo0, lo1, hi0, hi1, v, top + excess(diam)};
    };
    auto worse = [](const Cell& a, const Cell& b) {
      if (a.bound != b.bound) return a.bound < b.bound;
      if (a.lo0 != b.lo0) return a.lo0 > b.lo0;
      return a.lo1 > b.lo1;
    };
    std::priority_queue<Cell, std::vector<Cell>, decltype(worse)> heap(worse);
    const double w0 = domain.upper[0] - domain.lower[0];
    const double w1 = domain.upper[1] - domain.lower[1];
    const auto axis_cells = [&](double w) {
      return std::min<std::size_t>(
          512, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w / delta))));
    };
    const std::size_t n0 = axis_cells(w0), n1 = axis_cells(w1);
    const double h0 = w0 / static_cast<double>(n0), h1 = w1 / static_cast<double>(n1);
    std::vector<double> corner((n0 + 1) * (n1 + 1));
    for (std::size_t g1 = 0; g1 <= n1; ++g1) {
      for (std::size_t g0 = 0; g0 <= n0; ++g0) {
        const double x0 = (g0 == n0) ? domain.upper[0]
                                     : domain.lower[0] + h0 * static_cast<double>(g0);
        const double x1 = (g1 == n1) ? domain.upper[1]
                                     : domain.lower[1] + h1 * static_cast<double>(g1);
        corner[g1 * (n0 + 1) + g0] = eval(Point{x0, x1});
      }
    }
    for (std::size_t g1 = 0; g1 < n1; ++g1) {
      for (std::size_t g0 = 0; g0 < n0; ++g0) {
        const double a0 = domain.lower[0] + h0 * static_cast<double>(g0);
        const double a1 = domain.lower[1] + h1 * static_cast<double>(g1);
        const double b0 = (g0 + 1 == n0) ? domain.upper[0] : a0 + h0;
        const double b1 = (g1 + 1 == n1) ? domain.upper[1] : a1 + h1;
        heap.push(make(a0, a1, b0, b1,
                       {corner[g1 * (n0 + 1) + g0], corner[g1 * (n0 + 1) + g0 + 1],
                        corner[(g1 + 1) * (n0 + 1) + g0], corner[(g1 + 1) * (n0 + 1) + g0 + 1]}));
      }
    }
    corner.clear();
    corner.shrink_to_fit();
    while (!heap.empty()) {
      const Cell c = heap.top();
      if (c.bound <= target() || out.evaluations >= max_evaluations) break;
      heap.pop();
      const bool split0 = (c.hi0 - c.lo0) >= (c.hi1 - c.lo1);
      if (split0) {
        const double mid = 0.5 * (c.lo0 + c.hi0);
        if (!(mid > c.lo0 && mid < c.hi0)) {
          frozen = std::max(frozen, c.bound);
          continue;
        }
        const double va = eval(Point{mid, c.lo1});
        const double vb = eval(Point{mid, c.hi1});
        heap.push(make(c.lo0, c.lo1, mid, c.hi1, {c.v[0], va, c.v[2], vb}));
        heap.push(make(mid, c.lo1, c.hi0, c.hi1, {va, c.v[1], vb, c.v[3]}));
      } else {
        const double mid = 0.5 * (c.lo1 + c.hi1);
        if (!(mid > c.lo1 && mid < c.hi1)) {
          frozen = std::max(frozen, c.bound);
          continue;
        }
        const double va = eval(Point{c.lo0, mid});
        const double vb = eval(Point{c.hi0, mid});
        heap.push(make(c.lo0, c.lo1, c.hi0, mid, {c.v[0], c.v[1], va, vb}));
        heap.push(make(c.lo0, mid, c.hi0, c.hi1, {va, vb, c.v[2], c.v[3]}));
      }
    }
    out.bound = std::max({frozen, out.max_f, heap.empty() ? -1.0 : heap.top().bound});
  }
  return out;
}

}  // namespace detail

// Scans F over a grid of spacing <= delta (plus the generator atoms and the
// discrete input atoms as extra seeds) and polishes each local maximum by
// golden section.  The returned max_f is a lower bound for sup F; combined
// with lipschitz_bound it certifies sup F <= max_f + L * delta / 2 in 1-d
// (half the cell diagonal in 2-d).  Uncovered input mass propagates as
// UncoveredInputError.
inline ScanResult scan_max_F(const InputMeasure& rho, const DualPotential& psi, double delta) {
  if (!(delta > 0.0)) throw InvalidInput("scan spacing must be > 0");
  const Domain& domain = rho.domain;
  const detail::FEvaluator f(rho, psi);
  ScanResult out;
  out.max_f = -1.0;

  constexpr int kPolishIters = 40;
  constexpr std::size_t kCandidateCap = 4096;
  std::vector<std::pair<Point, double>> candidates;  // raw grid-local maxima > 1

  auto note_candidate = [&](const Point& y, double v) {
    if (v <= 1.0) return;
    candidates.push_back({y, v});
    if (candidates.size() > 2 * kCandidateCap) {
      std::nth_element(candidates.begin(), candidates.begin() + kCandidateCap,
                       candidates.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      candidates.resize(kCandidateCap);
    }
  };
  auto note_max = [&](const Point& y, double v) {
    if (v > out.max_f || (v == out.max_f && detail::lex_less(y, out.argmax))) {
      out.max_f = v;
      out.argmax = y;
    }
  };

  if (domain.dim == 1) {
    const double lo = domain.lower[0], hi = domain.upper[0];
    const std::size_t n =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((hi - lo) / delta)) + 1);
    if (n > 80000000)
      throw InvalidInput("scan grid would need " + std::to_string(n) + " points; raise delta");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    out.grid_spacing = h;

    // Streamed sweep: grid values are consumed as they are produced so the
    // fine certificates never materialise the whole grid.
    double vprev2 = -1.0, vprev1 = -1.0;
    Point yprev1{0.0, 0.0};
    for (std::size_t g = 0; g < n; ++g) {
      const Point y{lo + h * static_cast<double>(g), 0.0};
      const double v = f(y);
      note_max(y, v);
      if (g >= 1 && (g == 1 || vprev1 >= vprev2) && vprev1 >= v) note_candidate(yprev1, vprev1);
      if (g == n - 1 && v >= vprev1) note_candidate(y, v);
      vprev2 = vprev1;
      vprev1 = v;
      yprev1 = y;
    }

    // Polish the champion and the violation candidates.
    auto [py, pv] = detail::polish_max(f, domain, out.argmax, h, kPolishIters);
    note_max(py, pv);
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return detail::lex_less(a.first, b.first);
    });
    if (candidates.size() > kCandidateCap) candidates.resize(kCandidateCap);
    for (auto& [y, v] : candidates) {
      auto [qy, qv] = detail::polish_max(f, domain, y, h, kPolishIters);
      if (qv >= v) {
        y = qy;
        v = qv;
      }
      note_max(y, v);
    }
  } else {
    const std::size_t n0 = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil((domain.upper[0] - domain.lower[0]) / delta)) + 1);
    const std::size_t n1 = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil((domain.upper[1] - domain.lower[1]) / delta)) + 1);
    if (n0 * n1 > 30000000)
      throw InvalidInput("2-d scan grid would need " + std::to_string(n0 * n1) +
                         " points; raise delta");
    const double h0 = (domain.upper[0] - domain.lower[0]) / static_cast<double>(n0 - 1);
    const double h1 = (domain.upper[1] - domain.lower[1]) / static_cast<double>(n1 - 1);
    out.grid_spacing = std::max(h0, h1);
    std::vector<double> grid(n0 * n1);
    for (std::size_t g1 = 0; g1 < n1; ++g1) {
      for (std::size_t g0 = 0; g0 < n0; ++g0) {
        const Point y{domain.lower[0] + h0 * static_cast<double>(g0),
                      domain.lower[1] + h1 * static_cast<double>(g1)};
        const double v = f(y);
        grid[g1 * n0 + g0] = v;
        note_max(y, v);
      }
    }
    for (std::size_t g1 = 0; g1 < n1; ++g1) {
      for (std::size_t g0 = 0; g0 < n0; ++g0) {
        const double v = grid[g1 * n0 + g0];
        if (v <= 1.0) continue;
        const bool peak = (g0 == 0 || grid[g1 * n0 + g0 - 1] <= v) &&
                          (g0 + 1 == n0 || grid[g1 * n0 + g0 + 1] <= v) &&
                          (g1 == 0 || grid[(g1 - 1) * n0 + g0] <= v) &&
                          (g1 + 1 == n1 || grid[(g1 + 1) * n0 + g0] <= v);
        if (peak) {
          note_candidate(Point{domain.lower[0] + h0 * static_cast<double>(g0),
                               domain.lower[1] + h1 * static_cast<double>(g1)},
                         v);
        }
      }
    }
    auto [py, pv] = detail::polish_max(f, domain, out.argmax, out.grid_spacing, kPolishIters);
    note_max(py, pv);
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return detail::lex_less(a.first, b.first);
    });
    if (candidates.size() > kCandidateCap) candidates.resize(kCandidateCap);
    for (auto& [y, v] : candidates) {
      auto [qy, qv] = detail::polish_max(f, domain, y, out.grid_spacing, kPolishIters);
      if (qv >= v) {
        y = qy;
        v = qv;
      }
      note_max(y, v);
    }
  }

  // Atom seeds: maxima often sit exactly on atoms, so polish the best few.
  std::vector<Point> seeds = psi.generator.positions;
  if (!rho.is_density) seeds.insert(seeds.end(), rho.points.begin(), rho.points.end());
  std::vector<std::pair<Point, double>> seed_vals;
  seed_vals.reserve(seeds.size());
  for (const Point& y : seeds) seed_vals.push_back({domain.clamp(y), f(domain.clamp(y))});
  std::sort(seed_vals.begin(), seed_vals.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return detail::lex_less(a.first, b.first);
  });
  const std::size_t polish_seeds = std::min<std::size_t>(seed_vals.size(), 64);
  for (std::size_t k = 0; k < polish_seeds; ++k) {
    note_max(seed_vals[k].first, seed_vals[k].second);
    auto [qy, qv] =
        detail::polish_max(f, domain, seed_vals[k].first, out.grid_spacing, kPolishIters);
    note_max(qy, qv);
    if (qv > 1.0) note_candidate(qy, qv);
  }

  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return detail::lex_less(a.first, b.first);
  });
  out.local_maxima = std::move(candidates);
  return out;
}

struct CertificateReport {
  double objective = 0.0;
  double feasible_dual_value = 0.0;
  double gap_bound = 0.0;
  double max_f = 0.0;        // best F value actually found
  double sup_f_bound = 0.0;  // certified upper bound for sup F
  double rescale = 1.0;      // s with 1 - psi_feasible = s * (1 - psi)
  double lipschitz = 0.0;
  double grid_spacing = 0.0;
  Point argmax_f{0.0, 0.0};
  ScanResult scan;
};

struct CertifyOptions {
  // Refinement stops once the certified bound is within target_slack of the
  // best F value found (so the certificate costs only what the requested
  // precision needs), or after max_evaluations extra F evaluations.  Density
  // inputs cap the budget harder because each evaluation is a quadrature.
  double target_slack = 1e-9;
  std::size_t max_evaluations = 4000000;
};

// Builds the kernel potential of nu, certifies an upper bound on sup F with
// an adaptively refined Lipschitz scan started at spacing delta, and rescales
// the potential until it is feasible.  The rescaled potential's dual value is
// a true lower bound for the optimal objective, so gap_bound brackets the
// suboptimality of nu.
inline CertificateReport certify(const InputMeasure& rho, const ParticleMeasure& nu,
                                 const Kappa& kappa, double delta,
                                 const CertifyOptions& options = {}) {
  DualPotential psi{nu, kappa};
  CertificateReport rep;
  rep.objective = objective(rho, nu, kappa).value;
  rep.lipschitz = lipschitz_bound(rho, psi);
  rep.scan = scan_max_F(rho, psi, delta);
  rep.max_f = rep.scan.max_f;
  rep.argmax_f = rep.scan.argmax;
  rep.grid_spacing = rep.scan.grid_spacing;
  const double quad_slack = rho.is_density ? rho.density.quad_tol : 0.0;
  const std::size_t budget =
      rho.is_density ? std::min<std::size_t>(options.max_evaluations, 200000)
                     : options.max_evaluations;
  const detail::RefineResult refined = detail::refine_sup_bound(
      rho, psi, rep.lipschitz, delta, options.target_slack, budget);
  if (refined.max_f > rep.max_f) {
    rep.max_f = refined.max_f;
    rep.argmax_f = refined.argmax;
  }
  rep.sup_f_bound = std::max(refined.bound + quad_slack, rep.max_f);
  rep.rescale = std::max(1.0, rep.sup_f_bound);
  // 1 - integral of psi d rho equals the transport term of the objective.
  const double transport = 0.5 * (1.0 + nu.total_mass() - rep.objective);
  rep.feasible_dual_value = 1.0 - rep.rescale * transport;
  rep.gap_bound = rep.objective - rep.feasible_dual_value;
  return rep;
}

}  // namespace hkbary
