#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/summation.hpp"

namespace hkbary {

namespace gk {

// Gauss-Kronrod 7-15 pair on [-1, 1], QUADPACK constants.  Nodes are listed
// left to right; the embedded 7-point Gauss rule sits at the odd indices.
inline constexpr int kNodes = 15;

inline constexpr double kAbscissa[kNodes] = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};

inline constexpr double kKronrodWeight[kNodes] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};

// Gauss weight for node i, 0 at the Kronrod-only (even) indices.
inline constexpr double kGaussWeight[kNodes] = {
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.129484966168869693270611432679082,
    0.0};

}  // namespace gk

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panel_count = 0;
};

namespace detail {

// Sorted, deduplicated breakpoints clamped into [a, b], with a and b forced
// to be the first and last entries.
inline std::vector<double> prepare_breakpoints(double a, double b,
                                               std::span<const double> interior) {
  std::vector<double> pts;
  pts.reserve(interior.size() + 2);
  pts.push_back(a);
  for (double x : interior) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

// Adaptive Gauss-Kronrod 7-15 quadrature of a vector-valued integrand over
// [a, b].  The initial interval stack is seeded with the given breakpoints
// (kernel kinks, density edges), the panel with the largest error estimate is
// bisected until the summed estimate drops below abs_tol, and the final sum
// runs over panels ordered by left endpoint so the result is independent of
// the refinement schedule.  Throws QuadratureError when max_subdivisions
// bisections were not enough.
//
// F has signature void(double x, std::span<double> out) filling m values.
template <class F>
QuadratureResult integrate_adaptive_vec(F&& f, int m, double a, double b,
                                        std::span<const double> breakpoints,
                                        std::span<double> out, double abs_tol = 1e-10,
                                        std::size_t max_subdivisions = 10000) {
  if (m <= 0 || static_cast<int>(out.size()) < m)
    throw InvalidInput("integrate_adaptive_vec: bad output span");
  if (!std::isfinite(a) || !std::isfinite(b))
    throw InvalidInput("integration bounds must be finite");
  if (a > b) throw InvalidInput("integration bounds must satisfy a <= b");
  for (int c = 0; c < m; ++c) out[c] = 0.0;
  if (a == b) return {0.0, 0.0, 0};

  struct Panel {
    double a, b;
    double err;      // max over components of |kronrod - gauss|
    std::size_t id;  // creation order, tie-break for determinism
    bool active;
  };

  std::vector<Panel> panels;
  std::vector<double> values;  // panel id * m .. + m: Kronrod estimates
  std::vector<double> fx(m);

  auto eval_panel = [&](double pa, double pb) {
    const double mid = 0.5 * (pa + pb);
    const double half = 0.5 * (pb - pa);
    std::vector<double> kron(m, 0.0), gauss(m, 0.0);
    for (int i = 0; i < gk::kNodes; ++i) {
      const double x = mid + half * gk::kAbscissa[i];
      f(x, std::span<double>(fx));
      for (int c = 0; c < m; ++c) {
        kron[c] += gk::kKronrodWeight[i] * fx[c];
        gauss[c] += gk::kGaussWeight[i] * fx[c];
      }
    }
    double err = 0.0;
    for (int c = 0; c < m; ++c) {
      kron[c] *= half;
      gauss[c] *= half;
      err = std::max(err, std::fabs(kron[c] - gauss[c]));
    }
    const std::size_t id = panels.size();
    panels.push_back(Panel{pa, pb, err, id, true});
    values.insert(values.end(), kron.begin(), kron.end());
    return id;
  };

  // Heap of (error, id); largest error first, older panel on ties.
  auto cmp = [&](std::size_t lhs, std::size_t rhs) {
    if (panels[lhs].err != panels[rhs].err) return panels[lhs].err < panels[rhs].err;
    return panels[lhs].id > panels[rhs].id;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);

  const std::vector<double> pts = detail::prepare_breakpoints(a, b, breakpoints);
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const std::size_t id = eval_panel(pts[i], pts[i + 1]);
    total_err += panels[id].err;
    heap.push(id);
  }

  std::size_t splits = 0;
  const double width_floor =
      16.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(a), std::fabs(b));
  while (total_err > abs_tol && !heap.empty()) {
    const std::size_t worst = heap.top();
    heap.pop();
    Panel& p = panels[worst];
    if (p.err <= 0.0 || p.b - p.a <= width_floor) break;  // cannot improve further
    if (splits >= max_subdivisions) {
      throw QuadratureError("adaptive quadrature hit the subdivision cap before reaching " +
                                std::to_string(abs_tol),
                            total_err);
    }
    ++splits;
    p.active = false;
    total_err -= p.err;
    const double mid = 0.5 * (p.a + p.b);
    const double pa = p.a, pb = p.b;
    const std::size_t left = eval_panel(pa, mid);   // may reallocate panels
    const std::size_t right = eval_panel(mid, pb);
    total_err += panels[left].err + panels[right].err;
    heap.push(left);
    heap.push(right);
  }

  // Deterministic final reduction: active panels by left endpoint.
  std::vector<std::size_t> active;
  for (const Panel& p : panels) {
    if (p.active) active.push_back(p.id);
  }
  std::sort(active.begin(), active.end(),
            [&](std::size_t lhs, std::size_t rhs) { return panels[lhs].a < panels[rhs].a; });
  for (int c = 0; c < m; ++c) {
    out[c] = pairwise_sum_terms(active.size(),
                                [&](std::size_t k) { return values[active[k] * m + c]; });
  }
  return {out[0], total_err, active.size()};
}

// Scalar convenience wrapper.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b,
                                    std::span<const double> breakpoints, double abs_tol = 1e-10,
                                    std::size_t max_subdivisions = 10000) {
  double value = 0.0;
  auto wrapped = [&f](double x, std::span<double> out) { out[0] = f(x); };
  return integrate_adaptive_vec(wrapped, 1, a, b, breakpoints, std::span<double>(&value, 1),
                                abs_tol, max_subdivisions);
}

}  // namespace hkbary
