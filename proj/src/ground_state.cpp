#include "hnls/ground_state.hpp"

#include "hnls/banded.hpp"
#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace hnls {

namespace {

// L = -D4 + kappa^2 + e^{2s} on the reduced variable, unscaled by sigma_d ds.
struct ReducedOperator {
    std::size_t n = 0;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0; // stencil of -D4
    double kappa2 = 0.0;
    std::vector<double> weight;          // e^{2s_i}
    std::vector<double> nl_weight;       // r_i^{4/d}
    double exponent = 0.0;               // 4/d

    explicit ReducedOperator(const RadialGrid& g) : n(g.size()) {
        const double ds = g.log_step();
        a0 = 30.0 / (12.0 * ds * ds);
        a1 = -16.0 / (12.0 * ds * ds);
        a2 = 1.0 / (12.0 * ds * ds);
        kappa2 = g.kappa() * g.kappa();
        exponent = 4.0 / g.dimension();
        weight.resize(n);
        nl_weight.resize(n);
        const auto r = g.radii();
        for (std::size_t i = 0; i < n; ++i) {
            weight[i] = r[i] * r[i];
            nl_weight[i] = std::pow(r[i], exponent);
        }
    }

    std::vector<double> apply(const std::vector<double>& g) const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = (a0 + kappa2 + weight[i]) * g[i];
            if (i >= 1) v += a1 * g[i - 1];
            if (i >= 2) v += a2 * g[i - 2];
            if (i + 1 < n) v += a1 * g[i + 1];
            if (i + 2 < n) v += a2 * g[i + 2];
            out[i] = v;
        }
        return out;
    }

    Pentadiagonal<double> matrix() const {
        std::vector<double> dg(n), o1(n, a1), o2(n, a2);
        for (std::size_t i = 0; i < n; ++i) dg[i] = a0 + kappa2 + weight[i];
        return {std::move(dg), std::move(o1), std::move(o2)};
    }

    std::vector<double> nonlinear(const std::vector<double>& g) const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = nl_weight[i] * std::pow(std::abs(g[i]), exponent) * g[i];
        return out;
    }
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return kernels::omp::exact_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

} // namespace

double petviashvili_exponent(int d) {
    const double p = 1.0 + 4.0 / d;
    return p / (p - 1.0);
}

double origin_exponent(int d, double c) {
    return -(d - 2) / 2.0 + std::sqrt(hardy_constant(d) - c);
}

double sharp_constant(const GroundState& gs) {
    require(gs.mass_sq > 0.0, ErrorKind::DegenerateInput, "ground state has zero mass");
    return (gs.d + 2.0) / gs.d * std::pow(gs.mass_sq, -2.0 / gs.d);
}

double ground_state_residual(const Field& q) {
    const RadialGrid& grid = q.radial_grid();
    const ReducedOperator op(grid);
    const auto gc = q.reduced();
    std::vector<double> g(gc.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gc[i].real();
    auto rho = op.apply(g);
    const auto nl = op.nonlinear(g);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= nl[i];
    auto y = rho;
    op.matrix().solve(y);
    const double scale = sphere_measure(grid.dimension()) * grid.log_step();
    return std::sqrt(std::max(0.0, scale * dot(rho, y)));
}

GroundState ground_state_from_profile(const Field& q) {
    const RadialGrid& grid = q.radial_grid();
    const auto inv = invariant_report(q);
    GroundState gs{q, grid.dimension(), grid.coupling(), inv.mass, inv.hardy, inv.lp_critical, 0.0,
                   ground_state_residual(q), 0};
    gs.sharp_constant = sharp_constant(gs);
    return gs;
}

GroundState solve_ground_state(int d, double c, RadialGridPtr grid, const GroundStateOptions& opts) {
    require(grid != nullptr, ErrorKind::Structural, "ground state needs a radial grid");
    require(grid->dimension() == d && grid->coupling() == c, ErrorKind::Parameter,
            "grid dimension/coupling differ from the requested ground state");
    require(opts.tol > 0.0 && opts.max_iters > 0, ErrorKind::Parameter, "tolerance and iteration cap must be positive");
    const double gamma = opts.gamma > 0.0 ? opts.gamma : petviashvili_exponent(d);

    const ReducedOperator op(*grid);
    const auto L = op.matrix();
    const auto r = grid->radii();
    const auto lift = grid->lift();
    const std::size_t n = grid->size();
    const double scale = sphere_measure(d) * grid->log_step();

    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lift[i] * std::exp(-0.5 * r[i] * r[i]);

    // ||grad u||^2 + ||u||^2 = <g, L g> + c <g, g> on the reduced variable.
    auto h1_sq = [&](const std::vector<double>& v) { return scale * (dot(v, op.apply(v)) + c * dot(v, v)); };

    const double seed_size = h1_sq(g);
    std::size_t it = 0;
    bool converged = false;
    for (; it < opts.max_iters; ++it) {
        const auto Ng = op.nonlinear(g);
        const double num = dot(g, op.apply(g));
        const double den = dot(g, Ng);
        if (!(num > 0.0) || !(den > 0.0) || !std::isfinite(num / den))
            fail(ErrorKind::NonConvergence, "Petviashvili stabilising factor left (0, inf)");
        const double m = std::pow(num / den, gamma);
        auto next = Ng;
        L.solve(next);
        for (auto& v : next) v *= m;
        std::vector<double> diff(n);
        for (std::size_t i = 0; i < n; ++i) diff[i] = next[i] - g[i];
        g = std::move(next);
        const double size = h1_sq(g);
        if (!(size > 1e-24 * seed_size) || !(size < 1e24 * seed_size))
            fail(ErrorKind::NonConvergence, "Petviashvili iterate collapsed to zero or overflowed after " +
                                                std::to_string(it + 1) + " iterations (gamma=" + std::to_string(gamma) + ")");
        const double dist = std::sqrt(std::max(0.0, h1_sq(diff)));
        if (!std::isfinite(dist)) fail(ErrorKind::NonConvergence, "Petviashvili iterate is not finite");
        if (dist < opts.tol) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged) fail(ErrorKind::NonConvergence, "Petviashvili iteration hit the iteration cap");

    std::vector<cplx> gc(n);
    for (std::size_t i = 0; i < n; ++i) gc[i] = cplx(g[i], 0.0);
    auto gs = ground_state_from_profile(Field::from_reduced(grid, gc));
    gs.iterations = it;
    const double h1 = std::sqrt(h1_sq(g));
    if (gs.residual > opts.residual_tol * h1)
        fail(ErrorKind::NonConvergence, "Petviashvili iteration stalled: residual " + sci(gs.residual) + " exceeds " +
                                            sci(opts.residual_tol * h1) + " after " +
                                            std::to_string(it) + " iterations (gamma=" + std::to_string(gamma) + ")");
    return gs;
}

} // namespace hnls
