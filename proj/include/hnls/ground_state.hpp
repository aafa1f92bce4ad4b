#pragma once

// Radial ground state Q of  ΔQ + c/|x|^2 Q - Q + |Q|^{4/d} Q = 0.
//
// The solver is a spectral-renormalisation (Petviashvili) fixed point on the
// reduced variable g = r^{(d-2)/2} Q over a RadialGrid:
//     L g = N(g),  L = -d²/ds² + (c* - c) + e^{2s},  N(g) = r^{4/d} |g|^{4/d} g,
//     g <- M(g)^gamma L^{-1} N(g),  M(g) = <g, L g> / <g, N(g)>.
// At a fixed point M = 1, so the iteration solves the equation for any gamma;
// gamma = p / (p - 1) with p = 1 + 4/d removes the amplification of the
// iterate's own direction (the linearised multiplier there is p - gamma (p-1)).
//
// The shooting oracle integrates the same ODE independently, outward from
// r0 with the admissible local behaviour Q ~ A r^sigma,
// sigma = -(d-2)/2 + sqrt(c* - c), bisecting on A.

#include "hnls/grids.hpp"

#include <span>
#include <vector>

namespace hnls {

struct GroundState {
    Field profile;               // radial, real, nonnegative
    int d = 3;
    double c = 0.0;
    double mass_sq = 0.0;        // ||Q||_2^2
    double hardy = 0.0;          // H(Q)
    double critical_lp = 0.0;    // ||Q||_{4/d+2}^{4/d+2}
    double sharp_constant = 0.0; // C_d = (d+2)/d ||Q||^{-4/d}
    double residual = 0.0;       // dual-norm residual of the discrete equation
    std::size_t iterations = 0;
};

struct GroundStateOptions {
    double tol = 1e-10;          // successive-iterate H^1 distance
    std::size_t max_iters = 10000;
    double gamma = 0.0;          // 0 selects petviashvili_exponent(d)
    double residual_tol = 1e-8;  // accepted residual relative to ||Q||_H1
};

double petviashvili_exponent(int d);

/// sigma = -(d-2)/2 + sqrt(c* - c).
double origin_exponent(int d, double c);

GroundState solve_ground_state(int d, double c, RadialGridPtr grid, const GroundStateOptions& opts = {});

/// ((d+2)/d) * mass_sq^{-2/d}.
double sharp_constant(const GroundState& gs);

/// sqrt(<rho, L^{-1} rho>) with rho = L g - N(g): the residual of the
/// discrete ground-state equation measured in the dual of the energy norm.
double ground_state_residual(const Field& q);

/// Rebuild the cached invariants for a profile read back from disk.
GroundState ground_state_from_profile(const Field& q);

struct RadialProfile {
    int d = 3;
    double c = 0.0;
    double amplitude = 0.0; // A in Q ~ A r^sigma
    double sigma = 0.0;
    double r0 = 0.0;        // start radius of the integration
    double r_valid = 0.0;   // beyond this radius the profile is set to zero
    double mass = 0.0;      // ||Q||_2^2 by an independent quadrature
    std::vector<double> r;  // sample radii (as requested)
    std::vector<double> q;  // profile at r

    /// Profile at an arbitrary radius (series for r < r0, zero beyond r_valid).
    double value(double radius) const;

    std::vector<double> dense_s; // ln r on a uniform mesh, used by value()
    std::vector<double> dense_q;
};

struct ShootingOptions {
    double r0 = 1e-4;
    double rel_tol = 1e-13;
    int max_bisections = 200;
};

RadialProfile shooting_oracle(int d, double c, double r_max, std::span<const double> sample_radii = {},
                              const ShootingOptions& opts = {});

/// ||Q - Q_oracle||_2 / ||Q||_2 on the solver's grid.
double oracle_distance(const GroundState& gs, const RadialProfile& oracle);

} // namespace hnls
