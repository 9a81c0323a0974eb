#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hkbary/closed_forms.hpp"
#include "hkbary/solver.hpp"

using namespace hkbary;
using Catch::Matchers::WithinAbs;

namespace {

InputMeasure four_mass() {
  return InputMeasure::discrete(
      Domain::unit_interval(),
      {make_point(0.0), make_point(0.4), make_point(0.6), make_point(1.0)},
      {0.4, 0.1, 0.1, 0.4});
}

InputMeasure uniform_density() {
  return InputMeasure::density1d(
      Domain::unit_interval(), Density1D{DensityKind::kUniform, {0.0, 1.0}, {}, 1e-11});
}

ParticleMeasure sorted_by_position(const ParticleMeasure& nu) {
  std::vector<std::size_t> idx(nu.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return nu.positions[a][0] < nu.positions[b][0];
  });
  ParticleMeasure out(nu.dim);
  for (std::size_t j : idx) out.add_atom(nu.positions[j], nu.masses[j]);
  return out;
}

}  // namespace

TEST_CASE("initial particles for a density cover the domain") {
  const InputMeasure rho = uniform_density();
  const ParticleMeasure nu = init_particles(rho, Kappa(0.1));
  // Domain diameter over kernel radius: ceil(1 / (0.05 pi)) + 1 = 8 atoms.
  REQUIRE(nu.size() == 8);
  CHECK(nu.positions.front()[0] == 0.0);
  CHECK(nu.positions.back()[0] == 1.0);
  for (double m : nu.masses)
    CHECK_THAT(m, WithinAbs(0.1 * std::numbers::pi / 2.0, 1e-9));
}

TEST_CASE("initial particles for a discrete input use the squared weights") {
  const ParticleMeasure nu = init_particles(four_mass(), Kappa(0.08));
  REQUIRE(nu.size() == 4);
  const ParticleMeasure s = sorted_by_position(nu);
  CHECK_THAT(s.masses[0], WithinAbs(0.16, 1e-15));
  CHECK_THAT(s.masses[1], WithinAbs(0.01, 1e-15));
  CHECK_THAT(s.masses[2], WithinAbs(0.01, 1e-15));
  CHECK_THAT(s.masses[3], WithinAbs(0.16, 1e-15));
}

TEST_CASE("solver reproduces the decoupled four-cluster optimum") {
  const SolveReport rep = solve(four_mass(), Kappa(0.08), SolverConfig{});
  REQUIRE(rep.converged);
  CHECK(rep.status == "converged");
  CHECK_THAT(rep.objective, WithinAbs(0.66, 1e-8));
  REQUIRE(rep.particles.size() == 4);
  const ParticleMeasure s = sorted_by_position(rep.particles);
  const double expect_pos[4] = {0.0, 0.4, 0.6, 1.0};
  const double expect_mass[4] = {0.16, 0.01, 0.01, 0.16};
  for (int j = 0; j < 4; ++j) {
    CHECK_THAT(s.positions[j][0], WithinAbs(expect_pos[j], 1e-6));
    CHECK_THAT(s.masses[j], WithinAbs(expect_mass[j], 1e-6));
  }
  REQUIRE(rep.has_certificate);
  CHECK(rep.certificate.gap_bound <= 1e-6);
  CHECK(rep.certificate.gap_bound >= -1e-12);
  CHECK(rep.stationarity <= 1e-9);
  CHECK(rep.complementary_slackness <= 1e-6);
}

TEST_CASE("solver merges a wide uniform density into one atom") {
  const SolveReport rep = solve(uniform_density(), Kappa(1.0), SolverConfig{});
  REQUIRE(rep.converged);
  REQUIRE(rep.particles.size() == 1);
  const double root = 2.0 * std::sin(0.5);
  CHECK_THAT(rep.particles.positions[0][0], WithinAbs(0.5, 1e-4));
  CHECK_THAT(rep.particles.masses[0], WithinAbs(root * root, 1e-4));
  CHECK_THAT(rep.objective, WithinAbs(1.0 - root * root, 1e-6));
  REQUIRE(rep.has_certificate);
  CHECK(rep.certificate.gap_bound <= 1e-6);
}

TEST_CASE("descent never increases the objective") {
  const InputMeasure rho = four_mass();
  const Kappa kappa(0.15);
  const SolverConfig cfg;
  // Deliberately bad start: uneven masses, offset positions.
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.05), 0.02);
  nu.add_atom(make_point(0.33), 0.3);
  nu.add_atom(make_point(0.71), 0.01);
  nu.add_atom(make_point(0.93), 0.4);
  SolverState state;
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 60; ++step) {
    const StepReport st = descend(rho, nu, kappa, cfg, state);
    CHECK(st.objective <= prev + 1e-14);
    prev = st.objective;
    if (st.converged) break;
    REQUIRE_FALSE(st.stalled);
  }
}

TEST_CASE("descent recognises an exact optimum immediately") {
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.0), 0.16);
  nu.add_atom(make_point(0.4), 0.01);
  nu.add_atom(make_point(0.6), 0.01);
  nu.add_atom(make_point(1.0), 0.16);
  SolverState state;
  const StepReport st = descend(four_mass(), nu, Kappa(0.08), SolverConfig{}, state);
  CHECK(st.converged);
  CHECK(st.step_length == 0.0);
}

TEST_CASE("prune and merge consolidates clusters") {
  const Kappa kappa(0.08);  // merge radius 8e-5
  SolverConfig cfg;
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.2), 0.1);
  nu.add_atom(make_point(0.2 + 5e-5), 0.3);
  nu.add_atom(make_point(0.5), 1e-13);  // below the mass floor
  nu.add_atom(make_point(0.9), 0.2);

  const ParticleMeasure merged = prune_and_merge(nu, kappa, cfg);
  REQUIRE(merged.size() == 2);
  const ParticleMeasure s = sorted_by_position(merged);
  CHECK_THAT(s.masses[0], WithinAbs(0.4, 1e-15));
  // Mass-weighted mean of the merged pair.
  CHECK_THAT(s.positions[0][0], WithinAbs(0.2 + 5e-5 * 0.75, 1e-12));
  CHECK_THAT(s.masses[1], WithinAbs(0.2, 1e-15));
  CHECK_THAT(s.positions[1][0], WithinAbs(0.9, 1e-15));

  // Idempotent: a second pass changes nothing.
  const ParticleMeasure again = prune_and_merge(merged, kappa, cfg);
  REQUIRE(again.size() == merged.size());
  for (std::size_t j = 0; j < again.size(); ++j) {
    CHECK(again.positions[j][0] == merged.positions[j][0]);
    CHECK(again.masses[j] == merged.masses[j]);
  }
}

TEST_CASE("solved mass obeys the concentration bound") {
  for (const double k : {0.1, 0.3}) {
    const SolveReport rep = solve(four_mass(), Kappa(k), SolverConfig{});
    REQUIRE(rep.converged);
    CHECK(rep.particles.total_mass() <= 4.0 * concentration_bound(four_mass(), Kappa(k)));
  }
  const SolveReport rep = solve(uniform_density(), Kappa(0.1), SolverConfig{});
  REQUIRE(rep.converged);
  CHECK(rep.particles.total_mass() <=
        4.0 * concentration_bound(uniform_density(), Kappa(0.1)));
}

TEST_CASE("warm-started sweep matches cold solves") {
  const InputMeasure rho = four_mass();
  const std::vector<double> kappas{0.1, 0.2, 0.4};
  const SolverConfig cfg;
  const SweepResult sweep = kappa_sweep(rho, kappas, cfg);
  REQUIRE(sweep.reports.size() == 3);
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    REQUIRE(sweep.reports[i].converged);
    const SolveReport cold = solve(rho, Kappa(kappas[i]), cfg);
    REQUIRE(cold.converged);
    CHECK_THAT(sweep.reports[i].objective, WithinAbs(cold.objective, 1e-5));
  }
}

TEST_CASE("sweep validates its scale grid") {
  const SolverConfig cfg;
  CHECK_THROWS_AS(kappa_sweep(four_mass(), {}, cfg), InvalidInput);
  CHECK_THROWS_AS(kappa_sweep(four_mass(), {0.1, 0.1}, cfg), InvalidInput);
  CHECK_THROWS_AS(kappa_sweep(four_mass(), {0.2, 0.1, 0.3}, cfg), InvalidInput);
  // Descending grids are legal.
  const SweepResult down = kappa_sweep(four_mass(), {0.4, 0.2}, cfg);
  CHECK(down.reports.size() == 2);
}

TEST_CASE("solver is deterministic") {
  const SolveReport a = solve(four_mass(), Kappa(0.13), SolverConfig{});
  const SolveReport b = solve(four_mass(), Kappa(0.13), SolverConfig{});
  CHECK(a.objective == b.objective);
  CHECK(a.outer_iterations == b.outer_iterations);
  CHECK(a.inner_iterations == b.inner_iterations);
  REQUIRE(a.particles.size() == b.particles.size());
  for (std::size_t j = 0; j < a.particles.size(); ++j) {
    CHECK(a.particles.positions[j][0] == b.particles.positions[j][0]);
    CHECK(a.particles.masses[j] == b.particles.masses[j]);
  }
}

TEST_CASE("iteration caps are reported honestly") {
  SolverConfig cfg;
  cfg.max_outer_iters = 1;
  cfg.max_inner_iters = 1;
  const SolveReport rep = solve(uniform_density(), Kappa(0.5), cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.status == "iteration-limit");
  CHECK_FALSE(rep.particles.empty());  // partial result is still usable
}

TEST_CASE("a certified gap below tolerance counts as convergence") {
  // Just past the pair-merge boundary of the four-mass instance the descent
  // creeps along a nearly flat valley and never reaches the stationarity
  // tolerance, but the duality-gap certificate proves optimality to well
  // below feas_tol.  The solve must report convergence, not burn the whole
  // iteration budget and give up.
  const SolveReport rep = solve(four_mass(), Kappa(0.1544558183106600), SolverConfig{});
  REQUIRE(rep.converged);
  CHECK(rep.status == "converged");
  REQUIRE(rep.has_certificate);
  CHECK(rep.certificate.gap_bound <= 1e-6);
  // Far from the budget: the flat-valley exit must trigger early.
  CHECK(rep.inner_iterations < 18000);
}
