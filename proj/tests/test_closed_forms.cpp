#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "hkbary/closed_forms.hpp"
#include "hkbary/quadrature.hpp"
#include "hkbary/rng.hpp"

using namespace hkbary;

namespace {

ParticleMeasure single_atom(double x, double m) {
  ParticleMeasure nu(1);
  nu.add_atom(make_point(x), m);
  return nu;
}

InputMeasure four_mass() {
  return InputMeasure::discrete(
      Domain::unit_interval(),
      {make_point(0.0), make_point(0.4), make_point(0.6), make_point(1.0)},
      {0.4, 0.1, 0.1, 0.4});
}

}  // namespace

TEST_CASE("squared distance from a Dirac to itself is zero") {
  const Kappa kappa(1.0);
  CHECK(hk2_dirac(1.0, make_point(0.3), single_atom(0.3, 1.0), kappa) ==
        Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("squared distance to the zero measure is the Dirac's mass") {
  const Kappa kappa(0.5);
  CHECK(hk2_dirac(0.7, make_point(0.3), ParticleMeasure(1), kappa) == 0.7);
}

TEST_CASE("atoms beyond the reach decouple completely") {
  const Kappa kappa(0.08);
  // Distance 0.4 is far beyond the reach 0.04*pi ~ 0.1257.
  CHECK(hk2_dirac(1.0, make_point(0.0), single_atom(0.4, 1.0), kappa) == 2.0);
}

TEST_CASE("two unit Diracs at moderate distance match the explicit formula") {
  const Kappa kappa(1.0);
  const double got = hk2_dirac(1.0, make_point(0.0), single_atom(0.25, 1.0), kappa);
  CHECK(got == Catch::Approx(2.0 - 2.0 * std::cos(0.25)).epsilon(1e-14));
}

TEST_CASE("rescaling both measures rescales the squared distance") {
  const Kappa kappa(0.3);
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.1), 0.4);
  nu.add_atom(make_point(0.35), 0.2);
  ParticleMeasure nu4(1);
  for (std::size_t j = 0; j < nu.size(); ++j) nu4.add_atom(nu.positions[j], 4.0 * nu.masses[j]);
  const double base = hk2_dirac(0.7, make_point(0.2), nu, kappa);
  // Power-of-two factor: exact including in floating point.
  CHECK(hk2_dirac(4.0 * 0.7, make_point(0.2), nu4, kappa) == 4.0 * base);
  ParticleMeasure nu3(1);
  for (std::size_t j = 0; j < nu.size(); ++j) nu3.add_atom(nu.positions[j], 3.0 * nu.masses[j]);
  CHECK(hk2_dirac(3.0 * 0.7, make_point(0.2), nu3, kappa) ==
        Catch::Approx(3.0 * base).epsilon(1e-14));
}

TEST_CASE("optimal semicoupling marginal carries sqrt(m * kernel integral)") {
  const Kappa kappa(0.4);
  CounterRng rng(5, CounterRng::kTesting);
  for (int trial = 0; trial < 50; ++trial) {
    ParticleMeasure nu(1);
    const int s = 1 + static_cast<int>(rng.next() % 4);
    for (int j = 0; j < s; ++j)
      nu.add_atom(make_point(rng.next_uniform(0.0, 1.0)), rng.next_uniform(0.05, 1.0));
    const double m = rng.next_uniform(0.1, 2.0);
    const Point x = make_point(rng.next_uniform(0.0, 1.0));

    const double integral = kernel_mass(x, nu, kappa);
    const ParticleMeasure sigma = semicoupling_sigma(m, x, nu, kappa);
    CHECK(sigma.total_mass() ==
          Catch::Approx(std::sqrt(m * integral)).margin(1e-13));
    // The squared distance decomposes through the coupling mass.
    CHECK(hk2_dirac(m, x, nu, kappa) ==
          Catch::Approx(m + nu.total_mass() - 2.0 * sigma.total_mass()).margin(1e-13));
    // sigma is dominated by nu: same positions, never more mass per atom
    // than nu rescaled by the kernel bound of 1.
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      CHECK(sigma.masses[j] > 0.0);
    }
  }
}

TEST_CASE("semicoupling with an out-of-reach target is the zero measure") {
  const Kappa kappa(0.05);
  const ParticleMeasure sigma =
      semicoupling_sigma(1.0, make_point(0.0), single_atom(0.9, 1.0), kappa);
  CHECK(sigma.empty());
}

TEST_CASE("atomic squared Hellinger distance matches hand values") {
  ParticleMeasure a(1), b(1);
  a.add_atom(make_point(0.2), 0.49);
  a.add_atom(make_point(0.5), 0.25);
  b.add_atom(make_point(0.2), 0.09);
  b.add_atom(make_point(0.8), 0.16);
  // Matched at 0.2: (0.7 - 0.3)^2 = 0.16; unmatched 0.25 and 0.16 add up.
  CHECK(hellinger2_atomic(a, b) == Catch::Approx(0.16 + 0.25 + 0.16).epsilon(1e-14));
  CHECK(hellinger2_atomic(a, ParticleMeasure(1)) ==
        Catch::Approx(a.total_mass()).epsilon(1e-14));
  CHECK(hellinger2_atomic(a, a) == 0.0);
}

TEST_CASE("vanishing-length-scale barycenter squares the input weights") {
  const ParticleMeasure bary = hellinger_barycenter(four_mass());
  REQUIRE(bary.size() == 4);
  CHECK(bary.masses[0] == Catch::Approx(0.16).epsilon(1e-15));
  CHECK(bary.masses[1] == Catch::Approx(0.01).epsilon(1e-15));
  CHECK(bary.masses[2] == Catch::Approx(0.01).epsilon(1e-15));
  CHECK(bary.masses[3] == Catch::Approx(0.16).epsilon(1e-15));
}

TEST_CASE("repeated coordinates aggregate before squaring") {
  const InputMeasure rho = InputMeasure::discrete(
      Domain::unit_interval(),
      {make_point(0.2), make_point(0.2), make_point(0.7)}, {0.3, 0.2, 0.5});
  const ParticleMeasure bary = hellinger_barycenter(rho);
  REQUIRE(bary.size() == 2);
  CHECK(bary.positions[0][0] == 0.2);
  CHECK(bary.masses[0] == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(bary.masses[1] == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("large-length-scale barycenter is a unit Dirac at the mean") {
  const ParticleMeasure bary = wasserstein_limit_barycenter(four_mass());
  REQUIRE(bary.size() == 1);
  CHECK(bary.masses[0] == 1.0);
  CHECK(bary.positions[0][0] == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("concentration bound for the uniform density is the window width") {
  const InputMeasure rho = InputMeasure::density1d(
      Domain::unit_interval(), Density1D{DensityKind::kUniform, {0.0, 1.0}, {}, 1e-10});
  CHECK(concentration_bound(rho, Kappa(0.1)) ==
        Catch::Approx(0.1 * std::numbers::pi).epsilon(1e-12));
  // Huge length scale: the whole domain fits into one window.
  CHECK(concentration_bound(rho, Kappa(10.0)) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("concentration bound for discrete inputs is the best window sum") {
  CHECK(concentration_bound(four_mass(), Kappa(0.08)) == Catch::Approx(0.4).epsilon(1e-14));
  // Widen the scale until 0.4 and 0.6 share a window.
  CHECK(concentration_bound(four_mass(), Kappa(0.2)) >= 0.2 - 1e-14);
  // Wide enough for everything.
  CHECK(concentration_bound(four_mass(), Kappa(2.0)) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("2-d concentration uses a safe over-approximation") {
  const Domain sq = Domain::unit_square();
  const InputMeasure rho = InputMeasure::discrete(
      sq, {Point{0.0, 0.0}, Point{1.0, 1.0}}, {0.5, 0.5});
  // Atoms far apart relative to the reach: each window catches one atom.
  CHECK(concentration_bound(rho, Kappa(0.1)) == Catch::Approx(0.5).epsilon(1e-14));
  // The bound never underestimates: with both atoms coverable it reaches 1.
  CHECK(concentration_bound(rho, Kappa(2.0)) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mixture concentration agrees with the symmetric window") {
  Density1D d;
  d.kind = DensityKind::kGaussianMixture;
  d.mixture.means = {0.5};
  d.mixture.stddevs = {0.1};
  d.mixture.weights = {1.0};
  const InputMeasure rho = InputMeasure::density1d(Domain::unit_interval(), d);
  const Kappa kappa(0.1);
  const double r = kappa.reach();
  // By symmetry the best window is centred at the mean.
  const double expect = rho.interval_mass(0.5 - r, 0.5 + r);
  const double got = concentration_bound(rho, kappa);
  CHECK(got >= expect - 1e-12);
  CHECK(got == Catch::Approx(expect).margin(1e-6));
}

TEST_CASE("kernel volume constants match their analytic values") {
  CHECK(cd_constant(1) == std::numbers::pi / 2.0);
  const double pi = std::numbers::pi;
  // Polar integral of the squared truncated cosine over the plane.
  CHECK(cd_constant(2) == Catch::Approx(pi * pi * pi / 8.0 - pi / 2.0).epsilon(1e-12));
  // Frozen regression value.
  CHECK(cd_constant(2) == Catch::Approx(2.304988258242581).margin(1e-10));
  CHECK_THROWS_AS(cd_constant(3), InvalidInput);
}
