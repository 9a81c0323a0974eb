#pragma once

#include <cstdint>

#include "hkbary/normal.hpp"

namespace hkbary {

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Maps a 64-bit word to the open interval (0, 1); safe to feed inverse CDFs.
inline double to_uniform_open(std::uint64_t u) {
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based generator: draw i of stream (seed, purpose) is a pure
// function of (seed, purpose, i), so runs are reproducible no matter how
// draws are interleaved or distributed across workers.
class CounterRng {
 public:
  // Fixed purpose tags; new consumers get new tags so streams never collide.
  enum Purpose : std::uint64_t {
    kMixtureComponent = 1,
    kGaussian = 2,
    kUniformSample = 3,
    kTesting = 100,
  };

  CounterRng(std::uint64_t seed, std::uint64_t purpose)
      : key_(mix64(seed ^ mix64(purpose ^ 0x517CC1B727220A95ull))) {}

  std::uint64_t at(std::uint64_t i) const {
    return mix64(key_ + i * 0x9E3779B97F4A7C15ull);
  }

  std::uint64_t next() { return at(counter_++); }

  // Uniform on the open interval (0, 1); safe to feed into inverse CDFs.
  double next_uniform_open() { return to_uniform_open(next()); }

  // Uniform on [lo, hi).
  double next_uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Standard normal via the inverse-CDF transform.
  double next_normal() { return normal_icdf(next_uniform_open()); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hkbary
