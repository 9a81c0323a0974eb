#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/normal.hpp"
#include "hkbary/rng.hpp"

namespace hkbary {

// Draws n points from a one-dimensional density and returns them as an
// equal-weight (1/n) atom list.  Points falling outside the domain are
// clamped to its boundary.  Draw i is a pure function of (seed, i): the
// sample does not depend on evaluation order.
inline ParticleMeasure sample_density(const Density1D& density, const Domain& domain,
                                      std::size_t n, std::uint64_t seed) {
  if (n == 0)
    throw InvalidInput("an empty sample cannot be a probability measure");
  CounterRng pick(seed, CounterRng::kMixtureComponent);
  CounterRng draw(seed, CounterRng::kGaussian);
  CounterRng unif(seed, CounterRng::kUniformSample);

  ParticleMeasure out(1);
  const double w = 1.0 / static_cast<double>(n);

  if (density.kind == DensityKind::kUniform) {
    const double a = density.uniform.a, b = density.uniform.b;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = to_uniform_open(unif.at(i));
      out.add_atom(domain.clamp(make_point(a + u * (b - a))), w);
    }
    return out;
  }

  const auto& mix = density.mixture;
  std::vector<double> cum(mix.weights.size(), 0.0);
  double acc = 0.0;
  for (std::size_t c = 0; c < mix.weights.size(); ++c) {
    acc += mix.weights[c];
    cum[c] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u = to_uniform_open(pick.at(i)) * acc;
    std::size_t comp = 0;
    while (comp + 1 < cum.size() && u > cum[comp]) ++comp;
    const double z = normal_icdf(to_uniform_open(draw.at(i)));
    out.add_atom(domain.clamp(make_point(mix.means[comp] + mix.stddevs[comp] * z)), w);
  }
  return out;
}

// Two-dimensional isotropic Gaussian mixture sampler: per_component points
// from each component (in component order), equal weights summing to one,
// clamped into the domain.  Component c's draw i uses counter slots
// 2*(c*per_component+i) and +1 so the cloud is reproducible point by point.
inline ParticleMeasure sample_mixture2d(const std::vector<Point>& means,
                                        const std::vector<double>& stddevs,
                                        std::size_t per_component, const Domain& domain,
                                        std::uint64_t seed) {
  if (means.empty() || means.size() != stddevs.size())
    throw InvalidInput("2-d mixture needs matching non-empty means and stddevs");
  if (per_component == 0)
    throw InvalidInput("an empty sample cannot be a probability measure");
  CounterRng draw(seed, CounterRng::kGaussian);
  ParticleMeasure out(2);
  const double w = 1.0 / static_cast<double>(means.size() * per_component);
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (!(stddevs[c] > 0.0))
      throw InvalidInput("2-d mixture stddevs must be positive");
    for (std::size_t i = 0; i < per_component; ++i) {
      const std::uint64_t slot = 2 * (c * per_component + i);
      const double z0 = normal_icdf(to_uniform_open(draw.at(slot)));
      const double z1 = normal_icdf(to_uniform_open(draw.at(slot + 1)));
      Point p{means[c][0] + stddevs[c] * z0, means[c][1] + stddevs[c] * z1};
      out.add_atom(domain.clamp(p), w);
    }
  }
  return out;
}

}  // namespace hkbary
