#pragma once

// Deterministic random fields for inequality audits. Only the raw 64-bit
// output of mt19937_64 is used (the standard fixes it exactly); conversion to
// doubles is done here, so samples are identical across standard libraries.

#include "hnls/grids.hpp"

#include <cstdint>
#include <random>

namespace hnls {

using Rng = std::mt19937_64;

/// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

/// Sum of 1-4 Gaussian shells a_k exp(-(r - r_k)^2 / (2 w_k^2)) with chirped
/// phases exp(i b_k r^2). Smooth, even in r, rapidly decaying.
Field random_radial_field(RadialGridPtr grid, Rng& rng);

/// Sum of 1-4 Gaussian bumps with random centres, widths and plane-wave
/// phases; smooth on the lattice scale.
Field random_smooth_cartesian(CartesianGridPtr grid, Rng& rng);

/// i.i.d. complex samples, uniform in the unit square; rough on purpose.
Field random_rough_cartesian(CartesianGridPtr grid, Rng& rng);

} // namespace hnls
