#pragma once

// Scalar functionals of the mass-critical NLS with inverse-square potential:
// mass, Hardy functional H(u) = ||grad u||^2 - c ||u/|x|||^2, energy,
// L^p norms, the sharp Gagliardo-Nirenberg ratio, and two inequality audits.

#include "hnls/grids.hpp"

namespace hnls {

struct GroundState;

/// 4/d + 2, the exponent of the conserved potential energy.
double critical_exponent(int d);

struct InvariantReport {
    double mass = 0.0;
    double hardy = 0.0;          // gradient_term - c * potential_term
    double energy = 0.0;         // hardy / 2 - d / (4 + 2d) * lp_critical
    double lp_critical = 0.0;    // integral of |u|^{4/d+2}
    double potential_term = 0.0; // integral of |u|^2 / |x|^2
    double gradient_term = 0.0;  // ||grad u||^2
};

InvariantReport invariant_report(const Field& f);

double mass(const Field& f);
double hardy_functional(const Field& f);
double energy(const Field& f);

/// Integral of |f|^p.
double lp_power(const Field& f, double p);
double lp_norm(const Field& f, double p);

/// sqrt(||grad f||^2 + ||f||^2): the discrete H^1 norm used for stopping
/// rules and thresholds.
double h1_norm(const Field& f);

/// ||f||_{4/d+2}^{4/d+2} / (C_d H(f) ||f||_2^{4/d}); at most 1 by the sharp
/// Gagliardo-Nirenberg inequality, with equality at the ground state.
double gn_ratio(const Field& f, const GroundState& gs);

/// ||grad f||^2 - ||grad |f|||^2, nonnegative up to discretisation error.
double diamagnetic_defect(const Field& f);

struct HardyMargin {
    double absolute = 0.0; // ||grad f||^2 - c* ||f/|x|||^2
    double relative = 0.0; // absolute / ||grad f||^2
};

HardyMargin hardy_margin(const Field& f);

} // namespace hnls
