#pragma once

// Umbrella header: particle barycenters of unbalanced measures under the
// truncated-cosine transport cost, with certified duality gaps.

#include "hkbary/closed_forms.hpp"
#include "hkbary/config.hpp"
#include "hkbary/driver.hpp"
#include "hkbary/dual.hpp"
#include "hkbary/emit.hpp"
#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/grid_oracle.hpp"
#include "hkbary/kernels.hpp"
#include "hkbary/linkage.hpp"
#include "hkbary/measures.hpp"
#include "hkbary/normal.hpp"
#include "hkbary/objective.hpp"
#include "hkbary/quadrature.hpp"
#include "hkbary/rng.hpp"
#include "hkbary/sampling.hpp"
#include "hkbary/solver.hpp"
#include "hkbary/summation.hpp"
