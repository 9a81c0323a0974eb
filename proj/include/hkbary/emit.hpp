#pragma once

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/linkage.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/solver.hpp"

namespace hkbary {

// All floating-point CSV fields go through this: 17 significant digits is
// enough to round-trip an IEEE double exactly, so re-runs can be compared
// byte for byte.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // fixed newline bytes everywhere
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}

}  // namespace detail

// kappa, atom_index, x0[, x1], mass — one block of rows per length scale.
inline void write_particles_csv(const std::string& path, const std::vector<double>& kappas,
                                const std::vector<ParticleMeasure>& particles) {
  auto out = detail::open_csv(path);
  const int dim = particles.empty() ? 1 : particles.front().dim;
  out << (dim == 1 ? "kappa,atom_index,x0,mass\n" : "kappa,atom_index,x0,x1,mass\n");
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    const ParticleMeasure& nu = particles[i];
    for (std::size_t j = 0; j < nu.size(); ++j) {
      out << fmt17(kappas[i]) << ',' << j << ',' << fmt17(nu.positions[j][0]);
      if (dim == 2) out << ',' << fmt17(nu.positions[j][1]);
      out << ',' << fmt17(nu.masses[j]) << '\n';
    }
  }
}

// One row per length scale with the solve's headline numbers.  Certificate
// columns are NaN when no certificate exists (e.g. the reference-grid path).
struct DiagnosticsRow {
  double kappa = 0.0;
  std::size_t n_atoms = 0;
  double total_mass = 0.0;
  double objective = 0.0;
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  double gap_bound = std::numeric_limits<double>::quiet_NaN();
  double max_f = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  bool converged = false;
};

inline void write_diagnostics_csv(const std::string& path,
                                  const std::vector<DiagnosticsRow>& rows) {
  auto out = detail::open_csv(path);
  out << "kappa,n_atoms,total_mass,objective,dual_value,gap_bound,max_F,iterations,"
         "converged\n";
  for (const auto& r : rows) {
    out << fmt17(r.kappa) << ',' << r.n_atoms << ',' << fmt17(r.total_mass) << ','
        << fmt17(r.objective) << ',' << fmt17(r.dual_value) << ',' << fmt17(r.gap_bound)
        << ',' << fmt17(r.max_f) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
        << '\n';
  }
}

// kappa, y0[, y1], F and kappa, x0[, x1], psi curves share this shape.
struct CurveRow {
  double kappa = 0.0;
  Point x{0.0, 0.0};
  double value = 0.0;
};

inline void write_curve_csv(const std::string& path, int dim, const char* value_name,
                            const char* coord_name, const std::vector<CurveRow>& rows) {
  auto out = detail::open_csv(path);
  out << "kappa," << coord_name << "0,";
  if (dim == 2) out << coord_name << "1,";
  out << value_name << '\n';
  for (const auto& r : rows) {
    out << fmt17(r.kappa) << ',' << fmt17(r.x[0]);
    if (dim == 2) out << ',' << fmt17(r.x[1]);
    out << ',' << fmt17(r.value) << '\n';
  }
}

inline void write_dendrogram_csv(const std::string& path,
                                 const std::vector<LinkageMerge>& merges) {
  auto out = detail::open_csv(path);
  out << "merge_index,cluster_a,cluster_b,distance,size\n";
  for (std::size_t i = 0; i < merges.size(); ++i) {
    out << i << ',' << merges[i].cluster_a << ',' << merges[i].cluster_b << ','
        << fmt17(merges[i].distance) << ',' << merges[i].size << '\n';
  }
}

// x0[, x1], weight — the drawn input cloud, for plotting against results.
inline void write_samples_csv(const std::string& path, const InputMeasure& rho) {
  auto out = detail::open_csv(path);
  out << (rho.dim() == 1 ? "x0,weight\n" : "x0,x1,weight\n");
  for (std::size_t i = 0; i < rho.atom_count(); ++i) {
    out << fmt17(rho.points[i][0]);
    if (rho.dim() == 2) out << ',' << fmt17(rho.points[i][1]);
    out << ',' << fmt17(rho.weights[i]) << '\n';
  }
}

}  // namespace hkbary
