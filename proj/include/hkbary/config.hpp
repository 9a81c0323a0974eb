#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/sampling.hpp"
#include "hkbary/solver.hpp"

namespace hkbary {

// A fully parsed experiment: the input measure is already built (samples
// drawn), so everything downstream is deterministic data.
struct ExperimentConfig {
  Domain domain = Domain::unit_interval();
  InputMeasure rho = InputMeasure::discrete(Domain::unit_interval(),
                                            {Point{0.5, 0.0}}, {1.0});
  std::vector<double> kappas;
  SolverConfig solver;

  std::string output_dir = "out";
  bool emit_particles = true;
  bool emit_diagnostics = true;
  bool emit_fscan = false;
  bool emit_psi = false;
  bool emit_dendrogram = false;
  bool emit_samples = false;

  std::size_t scan_points = 512;    // per-axis resolution of emitted curves
  std::size_t oracle_grid_n = 2001; // fixed-grid reference resolution
  double oracle_tol = 1e-7;
  double f_threshold_scale = 9.5;   // near-active display threshold scale
  std::uint64_t seed = 0;
};

namespace detail {

// Range syntax "a:b:n[:log|:linear]"; spacing defaults to log because the
// interesting regime changes crowd the small end.
inline std::vector<double> parse_kappa_range(double a, double b, std::size_t n,
                                             const std::string& spacing) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw ConfigError("kappa range endpoints must be positive finite numbers");
  if (n < 1) throw ConfigError("kappa range needs count >= 1");
  if (n == 1) {
    if (a != b) throw ConfigError("kappa range with count 1 needs equal endpoints");
    return {a};
  }
  if (a == b) throw ConfigError("kappa range endpoints must differ");
  std::vector<double> out(n);
  if (spacing == "log") {
    const double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      out[i] = std::exp(la + t * (lb - la));
    }
    out.front() = a;
    out.back() = b;
  } else if (spacing == "linear") {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      out[i] = a + t * (b - a);
    }
    out.front() = a;
    out.back() = b;
  } else {
    throw ConfigError("kappa range spacing must be \"log\" or \"linear\"");
  }
  return out;
}

inline std::vector<double> parse_kappa_spec(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError("kappa list entries must be numbers");
      out.push_back(v.get<double>());
    }
    if (out.empty()) throw ConfigError("kappa list must not be empty");
    return out;
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 3 || parts.size() > 4)
      throw ConfigError("kappa range string must look like \"a:b:n\" or \"a:b:n:log\"");
    try {
      const double a = std::stod(parts[0]);
      const double b = std::stod(parts[1]);
      const long long n = std::stoll(parts[2]);
      if (n < 1) throw ConfigError("kappa range count must be >= 1");
      const std::string spacing = parts.size() == 4 ? parts[3] : "log";
      return parse_kappa_range(a, b, static_cast<std::size_t>(n), spacing);
    } catch (const std::invalid_argument&) {
      throw ConfigError("could not parse kappa range string \"" + s + "\"");
    } catch (const std::out_of_range&) {
      throw ConfigError("kappa range string \"" + s + "\" is out of range");
    }
  }
  if (j.is_object()) {
    for (const char* key : {"from", "to", "count"}) {
      if (!j.contains(key))
        throw ConfigError(std::string("kappa range object needs field \"") + key + "\"");
    }
    const std::string spacing = j.value("spacing", std::string("log"));
    return parse_kappa_range(j.at("from").get<double>(), j.at("to").get<double>(),
                             j.at("count").get<std::size_t>(), spacing);
  }
  throw ConfigError("kappa must be a number, list, range string, or range object");
}

inline Point parse_point(const nlohmann::json& j, int dim, const char* what) {
  if (dim == 1) {
    if (j.is_number()) return make_point(j.get<double>());
    if (j.is_array() && j.size() == 1 && j[0].is_number())
      return make_point(j[0].get<double>());
    throw ConfigError(std::string(what) + ": expected a number (1-d point)");
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Point{j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(std::string(what) + ": expected a [x, y] pair (2-d point)");
}

inline Domain parse_domain(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("domain must be an object");
  const int dim = j.value("dim", 1);
  if (dim != 1 && dim != 2)
    throw ConfigError("domain dim must be 1 or 2");
  Domain d = dim == 1 ? Domain::unit_interval() : Domain::unit_square();
  if (j.contains("lower")) d.lower = parse_point(j.at("lower"), dim, "domain.lower");
  if (j.contains("upper")) d.upper = parse_point(j.at("upper"), dim, "domain.upper");
  d.dim = dim;
  for (int k = 0; k < dim; ++k) {
    if (!(d.lower[k] < d.upper[k]))
      throw ConfigError("domain must have lower < upper in every coordinate");
  }
  return d;
}

inline Density1D parse_density(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("density spec needs a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  Density1D out;
  if (kind == "uniform") {
    out.kind = DensityKind::kUniform;
    out.uniform.a = j.value("a", 0.0);
    out.uniform.b = j.value("b", 1.0);
    if (!(out.uniform.a < out.uniform.b))
      throw ConfigError("uniform density needs a < b");
  } else if (kind == "mixture") {
    out.kind = DensityKind::kGaussianMixture;
    for (const char* key : {"means", "stddevs", "weights"}) {
      if (!j.contains(key) || !j.at(key).is_array())
        throw ConfigError(std::string("mixture density needs array \"") + key + "\"");
    }
    out.mixture.means = j.at("means").get<std::vector<double>>();
    out.mixture.stddevs = j.at("stddevs").get<std::vector<double>>();
    out.mixture.weights = j.at("weights").get<std::vector<double>>();
    const std::size_t m = out.mixture.means.size();
    if (m == 0 || out.mixture.stddevs.size() != m || out.mixture.weights.size() != m)
      throw ConfigError("mixture arrays must be non-empty and equally sized");
    for (double s : out.mixture.stddevs)
      if (!(s > 0.0)) throw ConfigError("mixture stddevs must be positive");
    for (double w : out.mixture.weights)
      if (!(w > 0.0)) throw ConfigError("mixture weights must be positive");
  } else {
    throw ConfigError("density kind must be \"uniform\" or \"mixture\"");
  }
  if (j.contains("quad_tol")) out.quad_tol = j.at("quad_tol").get<double>();
  return out;
}

inline InputMeasure parse_rho(const nlohmann::json& j, const Domain& domain,
                              std::uint64_t seed) {
  if (!j.is_object() || !j.contains("type"))
    throw ConfigError("rho spec needs a \"type\"");
  const std::string type = j.at("type").get<std::string>();

  if (type == "discrete") {
    if (!j.contains("points") || !j.at("points").is_array())
      throw ConfigError("discrete rho needs a \"points\" array");
    std::vector<Point> pts;
    for (const auto& p : j.at("points"))
      pts.push_back(parse_point(p, domain.dim, "rho.points"));
    std::vector<double> wts;
    if (j.contains("weights")) {
      wts = j.at("weights").get<std::vector<double>>();
    } else {
      wts.assign(pts.size(), pts.empty() ? 0.0 : 1.0 / static_cast<double>(pts.size()));
    }
    const bool normalize = j.value("normalize", false);
    return InputMeasure::discrete(domain, pts, wts, normalize);
  }

  if (type == "grid2d") {
    // n-by-n uniform grid of equal atoms covering the domain box.
    if (domain.dim != 2) throw ConfigError("grid2d rho needs a 2-d domain");
    const std::size_t n = j.value("n", std::size_t{0});
    if (n < 2) throw ConfigError("grid2d rho needs n >= 2");
    std::vector<Point> pts;
    pts.reserve(n * n);
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        const double tx = static_cast<double>(ix) / static_cast<double>(n - 1);
        const double ty = static_cast<double>(iy) / static_cast<double>(n - 1);
        pts.push_back(Point{domain.lower[0] + tx * (domain.upper[0] - domain.lower[0]),
                            domain.lower[1] + ty * (domain.upper[1] - domain.lower[1])});
      }
    }
    std::vector<double> wts(pts.size(), 1.0 / static_cast<double>(pts.size()));
    return InputMeasure::discrete(domain, pts, wts, true);
  }

  if (type == "density") {
    if (domain.dim != 1) throw ConfigError("density rho needs a 1-d domain");
    return InputMeasure::density1d(domain, parse_density(j.at("density")));
  }

  if (type == "sample") {
    if (domain.dim != 1) throw ConfigError("sample rho needs a 1-d domain");
    const std::size_t n = j.value("n", std::size_t{0});
    const std::uint64_t s = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : seed;
    const ParticleMeasure cloud =
        sample_density(parse_density(j.at("density")), domain, n, s);
    return InputMeasure::discrete(domain, cloud.positions, cloud.masses);
  }

  if (type == "sample2d") {
    if (domain.dim != 2) throw ConfigError("sample2d rho needs a 2-d domain");
    if (!j.contains("means") || !j.at("means").is_array())
      throw ConfigError("sample2d rho needs a \"means\" array of [x, y] pairs");
    std::vector<Point> means;
    for (const auto& p : j.at("means")) means.push_back(parse_point(p, 2, "rho.means"));
    if (!j.contains("stddevs"))
      throw ConfigError("sample2d rho needs a \"stddevs\" array");
    const auto stddevs = j.at("stddevs").get<std::vector<double>>();
    const std::size_t per = j.value("per_component", std::size_t{0});
    const std::uint64_t s = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : seed;
    const ParticleMeasure cloud = sample_mixture2d(means, stddevs, per, domain, s);
    return InputMeasure::discrete(domain, cloud.positions, cloud.masses);
  }

  throw ConfigError("rho type must be discrete, grid2d, density, sample, or sample2d");
}

inline void parse_solver(const nlohmann::json& j, SolverConfig& cfg) {
  if (!j.is_object()) throw ConfigError("solver must be an object");
  if (j.contains("optimizer")) {
    const std::string name = j.at("optimizer").get<std::string>();
    if (name == "descent")
      cfg.optimizer = OptimizerKind::kPreconditionedDescent;
    else if (name == "bfgs")
      cfg.optimizer = OptimizerKind::kBfgs;
    else if (name == "auto")
      cfg.optimizer.reset();
    else
      throw ConfigError("solver.optimizer must be \"descent\", \"bfgs\", or \"auto\"");
  }
  cfg.max_outer_iters = j.value("max_outer_iters", cfg.max_outer_iters);
  cfg.max_inner_iters = j.value("max_inner_iters", cfg.max_inner_iters);
  cfg.grad_tol = j.value("grad_tol", cfg.grad_tol);
  cfg.feas_tol = j.value("feas_tol", cfg.feas_tol);
  cfg.prune_mass = j.value("prune_mass", cfg.prune_mass);
  cfg.merge_radius_factor = j.value("merge_radius_factor", cfg.merge_radius_factor);
  cfg.insertion_mass = j.value("insertion_mass", cfg.insertion_mass);
  cfg.max_insertions_per_round =
      j.value("max_insertions_per_round", cfg.max_insertions_per_round);
  cfg.sufficient_decrease = j.value("sufficient_decrease", cfg.sufficient_decrease);
  cfg.curvature = j.value("curvature", cfg.curvature);
  cfg.scan_spacing_factor = j.value("scan_spacing_factor", cfg.scan_spacing_factor);
  if (!(cfg.grad_tol > 0.0) || !(cfg.feas_tol > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (!(cfg.scan_spacing_factor > 0.0))
    throw ConfigError("solver.scan_spacing_factor must be positive");
}

}  // namespace detail

struct ConfigOverrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

// Builds the experiment from its JSON description.  Every schema problem is
// reported as ConfigError; nothing is written to disk here.
inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const ConfigOverrides& overrides = {}) {
  try {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    ExperimentConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    if (overrides.seed) cfg.seed = *overrides.seed;

    cfg.domain = j.contains("domain") ? detail::parse_domain(j.at("domain"))
                                      : Domain::unit_interval();
    if (!j.contains("rho")) throw ConfigError("config needs a \"rho\" spec");
    cfg.rho = detail::parse_rho(j.at("rho"), cfg.domain, cfg.seed);
    if (!j.contains("kappa")) throw ConfigError("config needs a \"kappa\" spec");
    cfg.kappas = detail::parse_kappa_spec(j.at("kappa"));
    for (double k : cfg.kappas)
      if (!(k > 0.0) || !std::isfinite(k))
        throw ConfigError("kappa values must be positive finite numbers");

    if (j.contains("solver")) detail::parse_solver(j.at("solver"), cfg.solver);

    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;

    if (j.contains("emit")) {
      const auto& e = j.at("emit");
      if (!e.is_object()) throw ConfigError("emit must be an object of booleans");
      cfg.emit_particles = e.value("particles", cfg.emit_particles);
      cfg.emit_diagnostics = e.value("diagnostics", cfg.emit_diagnostics);
      cfg.emit_fscan = e.value("fscan", cfg.emit_fscan);
      cfg.emit_psi = e.value("psi", cfg.emit_psi);
      cfg.emit_dendrogram = e.value("dendrogram", cfg.emit_dendrogram);
      cfg.emit_samples = e.value("samples", cfg.emit_samples);
    }
    cfg.scan_points = j.value("scan_points", cfg.scan_points);
    if (cfg.scan_points < 2) throw ConfigError("scan_points must be at least 2");
    cfg.oracle_grid_n = j.value("oracle_grid_n", cfg.oracle_grid_n);
    if (cfg.oracle_grid_n < 2) throw ConfigError("oracle_grid_n must be at least 2");
    cfg.oracle_tol = j.value("oracle_tol", cfg.oracle_tol);
    cfg.f_threshold_scale = j.value("f_threshold_scale", cfg.f_threshold_scale);
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         const ConfigOverrides& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, overrides);
}

}  // namespace hkbary
