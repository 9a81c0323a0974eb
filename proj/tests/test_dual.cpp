#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "hkbary/dual.hpp"
#include "hkbary/objective.hpp"
#include "hkbary/rng.hpp"

using namespace hkbary;
using Catch::Matchers::WithinAbs;

namespace {

InputMeasure four_mass() {
  return InputMeasure::discrete(
      Domain::unit_interval(),
      {make_point(0.0), make_point(0.4), make_point(0.6), make_point(1.0)},
      {0.4, 0.1, 0.1, 0.4});
}

// At kappa = 0.08 the four clusters are farther apart than the kernel radius,
// so the optimal barycenter keeps every atom in place with the squared weight.
ParticleMeasure four_mass_optimum(double mass_factor = 1.0) {
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.0), 0.16 * mass_factor);
  nu.add_atom(make_point(0.4), 0.01 * mass_factor);
  nu.add_atom(make_point(0.6), 0.01 * mass_factor);
  nu.add_atom(make_point(1.0), 0.16 * mass_factor);
  return nu;
}

InputMeasure point_input_at_zero() {
  return InputMeasure::discrete(Domain(1, {-1.0, 0.0}, {1.0, 0.0}), {make_point(0.0)},
                                {1.0});
}

ParticleMeasure unit_atom(double x, double mass = 1.0) {
  ParticleMeasure nu(1);
  nu.add_atom(make_point(x), mass);
  return nu;
}

}  // namespace

TEST_CASE("kernel potential values") {
  const Kappa kappa(1.0);
  const DualPotential unit{unit_atom(0.0), kappa};
  CHECK(psi_eval(unit, make_point(0.0)) == 0.0);
  // Outside the kernel radius the potential saturates at 1.
  CHECK(psi_eval(unit, make_point(1.6)) == 1.0);
  CHECK(psi_eval(unit, make_point(-2.0)) == 1.0);

  const DualPotential quarter{unit_atom(0.0, 0.25), kappa};
  CHECK(psi_eval(quarter, make_point(0.0)) == 0.5);

  // Rescaled potential: 1 - s * (1 - psi), exact algebra.
  CHECK_THAT(psi_eval_rescaled(quarter, 1.25, make_point(0.0)),
             WithinAbs(1.0 - 1.25 * 0.5, 1e-16));
  CHECK(psi_eval_rescaled(quarter, 1.0, make_point(0.0)) == 0.5);
}

TEST_CASE("constraint function on a point input") {
  const InputMeasure rho = point_input_at_zero();
  const Kappa kappa(1.0);
  const DualPotential psi{unit_atom(0.0), kappa};
  // F(y) = cos^2(min(|y|, pi/2)) because the single input atom is covered by
  // a unit generator atom at the same spot.
  CHECK(constraint_F(rho, psi, make_point(0.0)) == 1.0);
  CHECK_THAT(constraint_F(rho, psi, make_point(0.3)),
             WithinAbs(std::cos(0.3) * std::cos(0.3), 1e-16));
  CHECK_THAT(constraint_F(rho, psi, make_point(-0.9)),
             WithinAbs(std::cos(0.9) * std::cos(0.9), 1e-16));
  CHECK(constraint_F(rho, psi, make_point(1.6)) == 0.0);
}

TEST_CASE("constraint function on the four-cluster instance") {
  const InputMeasure rho = four_mass();
  const Kappa kappa(0.08);
  const DualPotential psi{four_mass_optimum(), kappa};

  // Midpoint between the two middle clusters: both contribute cos^2(1.25).
  const double expected = 2.0 * std::cos(1.25) * std::cos(1.25);
  CHECK_THAT(constraint_F(rho, psi, make_point(0.5)),
             WithinAbs(0.19885638445306628, 5e-16));
  CHECK_THAT(constraint_F(rho, psi, make_point(0.5)), WithinAbs(expected, 1e-15));

  // At the optimum the constraint is active on every atom of the solution.
  for (const double x : {0.0, 0.4, 0.6, 1.0})
    CHECK_THAT(constraint_F(rho, psi, make_point(x)), WithinAbs(1.0, 1e-14));

  // Out of range of every cluster the constraint vanishes exactly.
  CHECK(constraint_F(rho, psi, make_point(0.25)) == 0.0);
}

TEST_CASE("mass gradient equals one minus the constraint") {
  CounterRng rng(2024, CounterRng::kTesting);
  for (int trial = 0; trial < 24; ++trial) {
    const Kappa kappa(rng.next_uniform(0.1, 0.8));
    const int n = 2 + static_cast<int>(rng.next() % 4);
    std::vector<Point> pts;
    std::vector<double> wts;
    for (int i = 0; i < n; ++i) {
      pts.push_back(make_point(rng.next_uniform(0.0, 1.0)));
      wts.push_back(rng.next_uniform(0.2, 1.0));
    }
    const InputMeasure rho =
        InputMeasure::discrete(Domain::unit_interval(), pts, wts, true);
    // One generator atom near every input atom, so everything is covered.
    ParticleMeasure nu(1);
    for (const Point& p : pts) {
      const double jitter = rng.next_uniform(-0.25 * kappa.value, 0.25 * kappa.value);
      nu.add_atom(rho.domain.clamp(make_point(p[0] + jitter)),
                  rng.next_uniform(0.05, 0.9));
    }
    const DualPotential psi{nu, kappa};
    const Gradient g = gradient(rho, nu, kappa);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double f = constraint_F(rho, psi, nu.positions[j]);
      CHECK_THAT(g.d_mass[j], WithinAbs(1.0 - f, 1e-12));
    }
  }
}

TEST_CASE("mass gradient matches the constraint for density input") {
  const InputMeasure rho = InputMeasure::density1d(
      Domain::unit_interval(), Density1D{DensityKind::kUniform, {0.0, 1.0}, {}, 1e-11});
  const Kappa kappa(0.3);
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.2), 0.3);
  nu.add_atom(make_point(0.55), 0.4);
  nu.add_atom(make_point(0.85), 0.25);
  const DualPotential psi{nu, kappa};
  const Gradient g = gradient(rho, nu, kappa);
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const double f = constraint_F(rho, psi, nu.positions[j]);
    CHECK_THAT(g.d_mass[j], WithinAbs(1.0 - f, 1e-8));
  }
}

TEST_CASE("position gradient matches the constraint slope") {
  const double h = 1e-6;
  SECTION("one dimension") {
    const InputMeasure rho = four_mass();
    const Kappa kappa(0.08);
    ParticleMeasure nu(1);
    nu.add_atom(make_point(0.013), 0.11);
    nu.add_atom(make_point(0.39), 0.012);
    nu.add_atom(make_point(0.617), 0.008);
    nu.add_atom(make_point(0.986), 0.2);
    const DualPotential psi{nu, kappa};
    const Gradient g = gradient(rho, nu, kappa);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double fp = constraint_F(rho, psi, make_point(nu.positions[j][0] + h));
      const double fm = constraint_F(rho, psi, make_point(nu.positions[j][0] - h));
      const double slope = (fp - fm) / (2.0 * h);
      CHECK_THAT(g.d_pos[j][0], WithinAbs(-nu.masses[j] * slope, 1e-6));
    }
  }
  SECTION("two dimensions") {
    const Domain sq = Domain::unit_square();
    const InputMeasure rho = InputMeasure::discrete(
        sq, {make_point(0.2, 0.3), make_point(0.5, 0.7), make_point(0.8, 0.4)},
        {0.5, 0.3, 0.2});
    const Kappa kappa(0.3);
    ParticleMeasure nu(2);
    nu.add_atom(make_point(0.25, 0.33), 0.2);
    nu.add_atom(make_point(0.47, 0.68), 0.15);
    nu.add_atom(make_point(0.79, 0.45), 0.1);
    const DualPotential psi{nu, kappa};
    const Gradient g = gradient(rho, nu, kappa);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      for (int axis = 0; axis < 2; ++axis) {
        Point yp = nu.positions[j], ym = nu.positions[j];
        yp[axis] += h;
        ym[axis] -= h;
        const double slope =
            (constraint_F(rho, psi, yp) - constraint_F(rho, psi, ym)) / (2.0 * h);
        CHECK_THAT(g.d_pos[j][axis], WithinAbs(-nu.masses[j] * slope, 1e-6));
      }
    }
  }
}

TEST_CASE("lipschitz bound examples") {
  // Point input fully covered by a unit atom: (1/kappa) * 1 / 1 = 1.
  CHECK_THAT(lipschitz_bound(point_input_at_zero(),
                             DualPotential{unit_atom(0.0), Kappa(1.0)}),
             WithinAbs(1.0, 1e-15));

  // Four clusters at the optimum: every term is weight / weight = 1, so the
  // bound is 4 / kappa = 50.
  CHECK_THAT(lipschitz_bound(four_mass(), DualPotential{four_mass_optimum(), Kappa(0.08)}),
             WithinAbs(50.0, 1e-12));

  // Two half masses with 1 - psi = 0.5 at both: (0.5/0.5 + 0.5/0.5) / 1 = 2.
  const InputMeasure rho = InputMeasure::discrete(
      Domain::unit_interval(), {make_point(0.0), make_point(1.0)}, {0.5, 0.5});
  const double c = std::cos(1.0) * std::cos(1.0);
  ParticleMeasure gen(1);
  gen.add_atom(make_point(0.0), 0.25 / (1.0 + c));
  gen.add_atom(make_point(1.0), 0.25 / (1.0 + c));
  const DualPotential psi{gen, Kappa(1.0)};
  CHECK_THAT(psi_eval(psi, make_point(0.0)), WithinAbs(0.5, 1e-15));
  CHECK_THAT(psi_eval(psi, make_point(1.0)), WithinAbs(0.5, 1e-15));
  CHECK_THAT(lipschitz_bound(rho, psi), WithinAbs(2.0, 1e-12));
}

TEST_CASE("scan finds the active maxima") {
  SECTION("point input") {
    const InputMeasure rho = point_input_at_zero();
    const ScanResult scan =
        scan_max_F(rho, DualPotential{unit_atom(0.0), Kappa(1.0)}, 1e-3);
    CHECK_THAT(scan.max_f, WithinAbs(1.0, 1e-12));
    // F = cos^2 rounds to exactly 1.0 on a ~2e-8 plateau around the atom, so
    // the reported argmax can sit anywhere inside it.
    CHECK_THAT(scan.argmax[0], WithinAbs(0.0, 1e-7));
    CHECK(scan.grid_spacing <= 1e-3);
    CHECK(scan.local_maxima.empty());  // nothing exceeds 1
  }
  SECTION("four clusters at the optimum") {
    const ScanResult scan =
        scan_max_F(four_mass(), DualPotential{four_mass_optimum(), Kappa(0.08)}, 1e-4);
    CHECK_THAT(scan.max_f, WithinAbs(1.0, 1e-8));
    CHECK_THAT(scan.argmax[0], WithinAbs(0.0, 1e-9));
    CHECK(scan.local_maxima.empty());
  }
  SECTION("underweight generator shows violations") {
    // Quartering the masses halves 1 - psi, so F doubles: max becomes 2.
    const ScanResult scan =
        scan_max_F(four_mass(), DualPotential{four_mass_optimum(0.25), Kappa(0.08)}, 1e-3);
    CHECK_THAT(scan.max_f, WithinAbs(2.0, 1e-9));
    REQUIRE(scan.local_maxima.size() >= 4);
    CHECK_THAT(scan.local_maxima.front().second, WithinAbs(2.0, 1e-9));
    for (std::size_t k = 0; k < scan.local_maxima.size(); ++k) {
      CHECK(scan.local_maxima[k].second > 1.0);
      if (k > 0)
        CHECK(scan.local_maxima[k - 1].second >= scan.local_maxima[k].second);
    }
  }
  SECTION("rejects nonpositive spacing") {
    CHECK_THROWS_AS(
        scan_max_F(point_input_at_zero(), DualPotential{unit_atom(0.0), Kappa(1.0)}, 0.0),
        InvalidInput);
  }
}

TEST_CASE("uncovered input is reported, not certified") {
  const InputMeasure rho = four_mass();
  const Kappa kappa(0.08);
  // Drop the cluster at x = 1: its input mass has no generator in range.
  ParticleMeasure nu(1);
  nu.add_atom(make_point(0.0), 0.16);
  nu.add_atom(make_point(0.4), 0.01);
  nu.add_atom(make_point(0.6), 0.01);
  const DualPotential psi{nu, kappa};

  // Evaluating far from the uncovered atom is fine: its kernel term is 0.
  CHECK_THAT(constraint_F(rho, psi, make_point(0.05)),
             WithinAbs(std::cos(0.625) * std::cos(0.625), 1e-15));

  // Near the uncovered atom the constraint blows up and names the location.
  try {
    constraint_F(rho, psi, make_point(0.95));
    FAIL("expected an uncovered-input report");
  } catch (const UncoveredInputError& err) {
    CHECK(err.dim == 1);
    CHECK_THAT(err.x[0], WithinAbs(1.0, 1e-12));
  }

  CHECK_THROWS_AS(lipschitz_bound(rho, psi), UncoveredInputError);
  CHECK_THROWS_AS(scan_max_F(rho, psi, 1e-3), UncoveredInputError);
  CHECK_THROWS_AS(certify(rho, nu, kappa, 1e-3), UncoveredInputError);
}

TEST_CASE("certificate on an exact optimum") {
  const InputMeasure rho = four_mass();
  const Kappa kappa(0.08);
  const ParticleMeasure nu = four_mass_optimum();
  const CertificateReport rep = certify(rho, nu, kappa, 8e-5);

  CHECK_THAT(rep.objective, WithinAbs(0.66, 1e-12));
  CHECK_THAT(rep.lipschitz, WithinAbs(50.0, 1e-12));
  CHECK(rep.gap_bound <= 1e-8);
  CHECK(rep.gap_bound >= -1e-12);
  CHECK(rep.feasible_dual_value <= rep.objective + 1e-12);
  CHECK(rep.sup_f_bound >= rep.max_f);
  CHECK(rep.rescale >= 1.0);
  CHECK_THAT(rep.max_f, WithinAbs(1.0, 1e-9));

  // The certified bound really dominates the constraint everywhere.
  CounterRng rng(5, CounterRng::kTesting);
  const DualPotential psi{nu, kappa};
  for (int i = 0; i < 200; ++i) {
    const double y = rng.next_uniform(0.0, 1.0);
    CHECK(constraint_F(rho, psi, make_point(y)) <= rep.sup_f_bound + 1e-12);
  }

  // A tighter slack request tightens the certificate accordingly.
  CertifyOptions tight;
  tight.target_slack = 1e-12;
  const CertificateReport sharp = certify(rho, nu, kappa, 8e-5, tight);
  CHECK(sharp.gap_bound <= 1e-10);
  CHECK(sharp.gap_bound >= -1e-12);
}

TEST_CASE("certificate rescales an infeasible potential") {
  // With masses quartered, 1 - psi is half its feasible size, so sup F = 2 and
  // the rescale factor doubles the potential exactly back to feasibility.
  const InputMeasure rho = four_mass();
  const Kappa kappa(0.08);
  const CertificateReport rep = certify(rho, four_mass_optimum(0.25), kappa, 1e-3);
  CHECK_THAT(rep.rescale, WithinAbs(2.0, 1e-6));
  CHECK_THAT(rep.objective, WithinAbs(0.745, 1e-12));
  // The rescaled potential happens to be the optimal one, so the certified
  // lower bound lands on the true optimal value 0.66.
  CHECK_THAT(rep.feasible_dual_value, WithinAbs(0.66, 1e-5));
  CHECK_THAT(rep.gap_bound, WithinAbs(0.085, 1e-5));
}

TEST_CASE("rescaling algebra of the dual value") {
  // Two half masses with 1 - psi = 0.5 at both input atoms: the potential
  // integrates to 0.5, and scaling by s = 1.25 gives 1 - 1.25 * 0.5 = 0.375.
  const double c = std::cos(1.0) * std::cos(1.0);
  ParticleMeasure gen(1);
  gen.add_atom(make_point(0.0), 0.25 / (1.0 + c));
  gen.add_atom(make_point(1.0), 0.25 / (1.0 + c));
  const DualPotential psi{gen, Kappa(1.0)};
  const InputMeasure rho = InputMeasure::discrete(
      Domain::unit_interval(), {make_point(0.0), make_point(1.0)}, {0.5, 0.5});

  const double plain = 0.5 * psi_eval(psi, make_point(0.0)) +
                       0.5 * psi_eval(psi, make_point(1.0));
  CHECK_THAT(plain, WithinAbs(0.5, 1e-15));
  const double s = 1.25;
  const double rescaled = 0.5 * psi_eval_rescaled(psi, s, make_point(0.0)) +
                          0.5 * psi_eval_rescaled(psi, s, make_point(1.0));
  CHECK_THAT(rescaled, WithinAbs(0.375, 1e-15));
  CHECK_THAT(1.0 - s * (1.0 - plain), WithinAbs(rescaled, 1e-15));

  // Pointwise, dividing 1 - psi by s divides the constraint by s.
  for (const double y : {0.1, 0.35, 0.62, 0.97}) {
    double manual = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const Point x = make_point(static_cast<double>(i));
      const double k = cos2_kernel(x, make_point(y), 1, psi.kappa);
      manual += 0.5 * k / (1.0 - psi_eval_rescaled(psi, s, x));
    }
    const double direct = constraint_F(rho, psi, make_point(y));
    CHECK_THAT(manual, WithinAbs(direct / s, 1e-14));
  }
}

TEST_CASE("weak duality holds for random measures") {
  CounterRng rng(99, CounterRng::kTesting);
  for (int trial = 0; trial < 20; ++trial) {
    const Kappa kappa(rng.next_uniform(0.1, 0.8));
    const int n = 2 + static_cast<int>(rng.next() % 4);
    std::vector<Point> pts;
    std::vector<double> wts;
    for (int i = 0; i < n; ++i) {
      pts.push_back(make_point(rng.next_uniform(0.0, 1.0)));
      wts.push_back(rng.next_uniform(0.2, 1.0));
    }
    const InputMeasure rho =
        InputMeasure::discrete(Domain::unit_interval(), pts, wts, true);
    ParticleMeasure nu(1);
    for (const Point& p : pts) {
      const double jitter = rng.next_uniform(-0.25 * kappa.value, 0.25 * kappa.value);
      nu.add_atom(rho.domain.clamp(make_point(p[0] + jitter)),
                  rng.next_uniform(0.05, 0.9));
    }
    const CertificateReport rep = certify(rho, nu, kappa, 2e-3);
    CHECK(rep.gap_bound >= -1e-12);
    CHECK(rep.feasible_dual_value <= rep.objective + 1e-12);
    CHECK(rep.sup_f_bound >= rep.max_f - 1e-15);
    CHECK(rep.rescale == std::max(1.0, rep.sup_f_bound));
  }
}

TEST_CASE("certificate for a density input optimum") {
  const InputMeasure rho = InputMeasure::density1d(
      Domain::unit_interval(), Density1D{DensityKind::kUniform, {0.0, 1.0}, {}, 1e-11});
  const Kappa kappa(1.0);
  const double root = 2.0 * std::sin(0.5);  // optimal 1 - psi slope at 0.5
  const ParticleMeasure nu = unit_atom(0.5, root * root);
  const CertificateReport rep = certify(rho, nu, kappa, 1e-3);
  CHECK_THAT(rep.objective, WithinAbs(1.0 - root * root, 1e-9));
  CHECK_THAT(rep.max_f, WithinAbs(1.0, 1e-7));
  CHECK(rep.gap_bound <= 1e-6);
  CHECK(rep.gap_bound >= -1e-12);
  CHECK(rep.rescale <= 1.0 + 1e-7);
}
