#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hkbary/config.hpp"
#include "hkbary/dual.hpp"
#include "hkbary/emit.hpp"
#include "hkbary/errors.hpp"
#include "hkbary/grid_oracle.hpp"
#include "hkbary/linkage.hpp"
#include "hkbary/objective.hpp"
#include "hkbary/sampling.hpp"
#include "hkbary/solver.hpp"

namespace hkbary {

enum class Subcommand { kSolve, kSweep, kCertify, kOracle, kSample, kDendrogram };

inline std::optional<Subcommand> parse_subcommand(const std::string& name) {
  if (name == "solve") return Subcommand::kSolve;
  if (name == "sweep") return Subcommand::kSweep;
  if (name == "certify") return Subcommand::kCertify;
  if (name == "oracle") return Subcommand::kOracle;
  if (name == "sample") return Subcommand::kSample;
  if (name == "dendrogram") return Subcommand::kDendrogram;
  return std::nullopt;
}

namespace detail {

inline std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::vector<CurveRow> sample_curves(const ExperimentConfig& cfg, double kappa,
                                           const ParticleMeasure& nu, bool want_f) {
  const DualPotential psi{nu, Kappa(kappa)};
  const FEvaluator f(cfg.rho, psi);
  const Domain& dom = cfg.domain;
  const std::size_t n = cfg.scan_points;
  std::vector<CurveRow> rows;
  auto value_at = [&](const Point& p) {
    if (!want_f) return psi_eval(psi, p);
    try {
      return f(p);
    } catch (const UncoveredInputError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  if (dom.dim == 1) {
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      const Point p = make_point(dom.lower[0] + t * (dom.upper[0] - dom.lower[0]));
      rows.push_back({kappa, p, value_at(p)});
    }
    return rows;
  }
  rows.reserve(n * n);
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double tx = static_cast<double>(ix) / static_cast<double>(n - 1);
      const double ty = static_cast<double>(iy) / static_cast<double>(n - 1);
      const Point p{dom.lower[0] + tx * (dom.upper[0] - dom.lower[0]),
                    dom.lower[1] + ty * (dom.upper[1] - dom.lower[1])};
      rows.push_back({kappa, p, value_at(p)});
    }
  }
  return rows;
}

inline DiagnosticsRow diagnostics_row(double kappa, const SolveReport& rep) {
  DiagnosticsRow row;
  row.kappa = kappa;
  row.n_atoms = rep.particles.size();
  row.total_mass = rep.particles.total_mass();
  row.objective = rep.objective;
  if (rep.has_certificate) {
    row.dual_value = rep.certificate.feasible_dual_value;
    row.gap_bound = rep.certificate.gap_bound;
    row.max_f = rep.certificate.max_f;
  }
  row.iterations = rep.inner_iterations;
  row.converged = rep.converged;
  return row;
}

inline void emit_solution_files(const ExperimentConfig& cfg,
                                const std::vector<double>& kappas,
                                const std::vector<SolveReport>& reports) {
  std::vector<ParticleMeasure> particles;
  std::vector<DiagnosticsRow> diag;
  particles.reserve(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    particles.push_back(reports[i].particles);
    diag.push_back(diagnostics_row(kappas[i], reports[i]));
  }
  if (cfg.emit_particles)
    write_particles_csv(join_path(cfg.output_dir, "particles.csv"), kappas, particles);
  if (cfg.emit_diagnostics)
    write_diagnostics_csv(join_path(cfg.output_dir, "diagnostics.csv"), diag);
  if (cfg.emit_fscan || cfg.emit_psi) {
    std::vector<CurveRow> fs, ps;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].particles.empty()) continue;
      if (cfg.emit_fscan) {
        auto rows = sample_curves(cfg, kappas[i], reports[i].particles, true);
        fs.insert(fs.end(), rows.begin(), rows.end());
      }
      if (cfg.emit_psi) {
        auto rows = sample_curves(cfg, kappas[i], reports[i].particles, false);
        ps.insert(ps.end(), rows.begin(), rows.end());
      }
    }
    if (cfg.emit_fscan)
      write_curve_csv(join_path(cfg.output_dir, "fscan.csv"), cfg.domain.dim, "F", "y", fs);
    if (cfg.emit_psi)
      write_curve_csv(join_path(cfg.output_dir, "psi.csv"), cfg.domain.dim, "psi", "x", ps);
  }
  if (cfg.emit_samples) write_samples_csv(join_path(cfg.output_dir, "samples.csv"), cfg.rho);
  if (cfg.emit_dendrogram) {
    if (cfg.rho.is_density || cfg.rho.atom_count() < 2)
      throw ConfigError("dendrogram output needs a discrete input with >= 2 points");
    ParticleMeasure cloud(cfg.rho.domain.dim);
    for (std::size_t i = 0; i < cfg.rho.atom_count(); ++i)
      cloud.add_atom(cfg.rho.points[i], cfg.rho.weights[i]);
    write_dendrogram_csv(join_path(cfg.output_dir, "dendrogram.csv"),
                         single_linkage(cloud));
  }
}

}  // namespace detail

// Executes one experiment.  Returns the process exit status: 0 when every
// requested solve converged, 1 when some did not (outputs still written),
// 2 for configuration/usage errors.  `log` receives human-oriented progress
// and the certify summaries; CSV files carry the actual results.
inline int run(const ExperimentConfig& cfg, Subcommand sub, std::ostream& log) {
  try {
    std::filesystem::create_directories(cfg.output_dir);

    if (sub == Subcommand::kSample) {
      if (cfg.rho.is_density)
        throw ConfigError("sample subcommand needs a sampled or discrete rho");
      write_samples_csv(detail::join_path(cfg.output_dir, "samples.csv"), cfg.rho);
      log << "wrote " << cfg.rho.atom_count() << " sample points\n";
      return 0;
    }

    if (sub == Subcommand::kDendrogram) {
      if (cfg.rho.is_density || cfg.rho.atom_count() < 2)
        throw ConfigError("dendrogram subcommand needs a discrete rho with >= 2 points");
      ParticleMeasure cloud(cfg.rho.domain.dim);
      for (std::size_t i = 0; i < cfg.rho.atom_count(); ++i)
        cloud.add_atom(cfg.rho.points[i], cfg.rho.weights[i]);
      const auto merges = single_linkage(cloud);
      write_dendrogram_csv(detail::join_path(cfg.output_dir, "dendrogram.csv"), merges);
      log << "wrote " << merges.size() << " dendrogram merges\n";
      return 0;
    }

    if (sub == Subcommand::kOracle) {
      if (cfg.rho.is_density)
        throw ConfigError("oracle subcommand needs a discrete rho");
      std::vector<ParticleMeasure> particles;
      std::vector<DiagnosticsRow> diag;
      bool all_ok = true;
      for (double k : cfg.kappas) {
        const GridSolution sol = solve_on_grid(cfg.rho, Kappa(k),
                                               static_cast<int>(cfg.oracle_grid_n),
                                               cfg.oracle_tol);
        // Emit only the nodes that actually carry mass.
        ParticleMeasure support(sol.nodes.dim);
        for (std::size_t j = 0; j < sol.nodes.size(); ++j) {
          if (sol.nodes.masses[j] > cfg.solver.prune_mass)
            support.add_atom(sol.nodes.positions[j], sol.nodes.masses[j]);
        }
        DiagnosticsRow row;
        row.kappa = k;
        row.n_atoms = support.size();
        row.total_mass = support.total_mass();
        row.objective = sol.objective;
        row.iterations = sol.iterations;
        row.converged = sol.converged;
        diag.push_back(row);
        particles.push_back(std::move(support));
        all_ok = all_ok && sol.converged;
        log << "oracle kappa=" << fmt17(k) << " objective=" << fmt17(sol.objective)
            << " stationarity=" << fmt17(sol.stationarity) << '\n';
      }
      if (cfg.emit_particles)
        write_particles_csv(detail::join_path(cfg.output_dir, "particles.csv"),
                            cfg.kappas, particles);
      if (cfg.emit_diagnostics)
        write_diagnostics_csv(detail::join_path(cfg.output_dir, "diagnostics.csv"), diag);
      return all_ok ? 0 : 1;
    }

    // solve | sweep | certify all produce per-kappa solves.
    std::vector<SolveReport> reports;
    if (sub == Subcommand::kSweep) {
      SweepResult sweep = kappa_sweep(cfg.rho, cfg.kappas, cfg.solver);
      reports = std::move(sweep.reports);
    } else {
      reports.reserve(cfg.kappas.size());
      for (double k : cfg.kappas)
        reports.push_back(solve(cfg.rho, Kappa(k), cfg.solver));
    }

    detail::emit_solution_files(cfg, cfg.kappas, reports);

    bool all_ok = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const SolveReport& rep = reports[i];
      all_ok = all_ok && rep.converged;
      log << "kappa=" << fmt17(cfg.kappas[i]) << " status=" << rep.status
          << " atoms=" << rep.particles.size() << " objective=" << fmt17(rep.objective);
      if (rep.has_certificate)
        log << " gap_bound=" << fmt17(rep.certificate.gap_bound);
      log << '\n';

      if (sub == Subcommand::kCertify && rep.has_certificate) {
        // Presentation-only summary of the near-active region: atoms whose
        // constraint value sits above 1 - exp(-scale)/kappa.
        const double threshold =
            1.0 - std::exp(-cfg.f_threshold_scale) / cfg.kappas[i];
        std::size_t near_active = 0;
        if (!rep.particles.empty()) {
          const Gradient g = gradient(cfg.rho, rep.particles, Kappa(cfg.kappas[i]));
          for (double gm : g.d_mass)
            if (1.0 - gm >= threshold) ++near_active;
        }
        const CertificateReport& c = rep.certificate;
        log << "certify kappa=" << fmt17(cfg.kappas[i]) << " objective="
            << fmt17(c.objective) << " dual=" << fmt17(c.feasible_dual_value)
            << " gap_bound=" << fmt17(c.gap_bound) << " max_F=" << fmt17(c.max_f)
            << " sup_F_bound=" << fmt17(c.sup_f_bound) << " lipschitz="
            << fmt17(c.lipschitz) << " near_active_atoms=" << near_active
            << " f_threshold=" << fmt17(threshold) << '\n';
      }
    }
    return all_ok ? 0 : 1;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidInput& e) {
    log << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hkbary
