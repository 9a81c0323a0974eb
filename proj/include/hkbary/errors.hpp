#pragma once

#include <stdexcept>
#include <string>

namespace hkbary {

// Invalid user-supplied data (bad weights, nonfinite coordinates, ...).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Configuration file errors (unknown keys, missing fields, bad ranges).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive quadrature gave up before reaching the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error(achieved_error) {}

  double achieved_error;
};

// Some input mass has no generator atom within the kernel radius, so the
// constraint function diverges there.  Carries the offending location so the
// solver can insert a particle exactly at it.
class UncoveredInputError : public std::runtime_error {
 public:
  UncoveredInputError(const std::string& what, double x0, double x1, int dim)
      : std::runtime_error(what), x{x0, x1}, dim(dim) {}

  double x[2];
  int dim;
};

}  // namespace hkbary
