#include "hnls/functionals.hpp"

#include "hnls/errors.hpp"
#include "hnls/ground_state.hpp"

#include <cmath>

namespace hnls {

namespace k = kernels;

double critical_exponent(int d) { return 4.0 / d + 2.0; }

double mass(const Field& f) {
    const auto v = f.values();
    if (f.is_radial()) {
        const auto w = f.radial_grid().weights();
        return k::omp::exact_sum(v.size(), [&](std::size_t i) { return w[i] * std::norm(v[i]); });
    }
    return f.cartesian_grid().cell_volume() *
           k::omp::exact_sum(v.size(), [&](std::size_t i) { return std::norm(v[i]); });
}

double lp_power(const Field& f, double p) {
    require(p >= 1.0, ErrorKind::Parameter, "L^p exponent must be >= 1");
    const auto v = f.values();
    if (f.is_radial()) {
        const auto w = f.radial_grid().weights();
        return k::omp::exact_sum(v.size(), [&](std::size_t i) { return w[i] * k::nonneg_pow(std::norm(v[i]), 0.5 * p); });
    }
    return f.cartesian_grid().cell_volume() *
           k::omp::exact_sum(v.size(), [&](std::size_t i) { return k::nonneg_pow(std::norm(v[i]), 0.5 * p); });
}

double lp_norm(const Field& f, double p) {
    require(p >= 2.0, ErrorKind::Parameter, "lp_norm expects p >= 2");
    return std::pow(lp_power(f, p), 1.0 / p);
}

InvariantReport invariant_report(const Field& f) {
    InvariantReport r;
    const int d = f.dimension();
    r.mass = mass(f);
    r.gradient_term = gradient_norm_sq(f);
    r.potential_term = potential_integral(f);
    r.hardy = r.gradient_term - f.coupling() * r.potential_term;
    r.lp_critical = lp_power(f, critical_exponent(d));
    r.energy = 0.5 * r.hardy - (double(d) / (4.0 + 2.0 * d)) * r.lp_critical;
    return r;
}

double hardy_functional(const Field& f) {
    return gradient_norm_sq(f) - f.coupling() * potential_integral(f);
}

double energy(const Field& f) {
    const int d = f.dimension();
    return 0.5 * hardy_functional(f) - (double(d) / (4.0 + 2.0 * d)) * lp_power(f, critical_exponent(d));
}

double h1_norm(const Field& f) { return std::sqrt(gradient_norm_sq(f) + mass(f)); }

double gn_ratio(const Field& f, const GroundState& gs) {
    const int d = f.dimension();
    require(d == gs.d, ErrorKind::Parameter, "ground state dimension differs from the field's");
    const double h = hardy_functional(f);
    if (!(h > 0.0)) fail(ErrorKind::DegenerateInput, "gn_ratio needs H(f) > 0");
    const double m = mass(f);
    const double lhs = lp_power(f, critical_exponent(d));
    return lhs / (gs.sharp_constant * h * std::pow(m, 2.0 / d));
}

double diamagnetic_defect(const Field& f) { return gradient_norm_sq(f) - gradient_norm_sq(f.modulus()); }

HardyMargin hardy_margin(const Field& f) {
    const double grad = gradient_norm_sq(f);
    const double pot = potential_integral(f);
    const double cstar = hardy_constant(f.dimension());
    HardyMargin m;
    m.absolute = grad - cstar * pot;
    m.relative = grad > 0.0 ? m.absolute / grad : 0.0;
    return m;
}

} // namespace hnls
