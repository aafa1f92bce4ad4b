#include "hnls/concentration.hpp"

#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"

#include <cmath>

namespace hnls {

namespace k = kernels;

double rho(const GroundState& gs, const Field& f) {
    const double h = hardy_functional(f);
    if (!(h > 1e-300)) fail(ErrorKind::DegenerateInput, "rho needs H(f) > 0");
    return std::sqrt(gs.hardy / h);
}

RescaleResult rescaled_snapshot(const GroundState& gs, const Field& f) {
    const double lambda = rho(gs, f);
    if (!f.is_radial()) return rescale(f, lambda);
    // On the log grid the dilation is an exact shift of the nodes:
    // r^a v(r) = lambda * (r^a u)(lambda r), so the reduced samples only scale.
    const auto& g = f.radial_grid();
    const auto shifted = RadialGrid::make_log(g.dimension(), g.coupling(), g.size(), g.s_min() - std::log(lambda),
                                              g.r_max() / lambda);
    auto red = f.reduced();
    for (auto& x : red) x *= lambda;
    return {Field::from_reduced(shifted, red), false};
}

double windowed_mass(const Field& f, std::span<const double> center, double radius) {
    require(radius > 0.0, ErrorKind::Parameter, "window radius must be positive");
    const auto v = f.values();
    if (f.is_radial()) {
        for (double x : center)
            if (x != 0.0) fail(ErrorKind::UnsupportedOperation, "radial fields only support windows centred at the origin");
        const auto r = f.radial_grid().radii();
        const auto w = f.radial_grid().weights();
        return k::omp::exact_sum(v.size(), [&](std::size_t i) { return r[i] <= radius ? w[i] * std::norm(v[i]) : 0.0; });
    }
    const auto& grid = f.cartesian_grid();
    const int d = grid.dimension();
    require(int(center.size()) == d, ErrorKind::Structural, "window centre rank mismatch");
    const double box = 2.0 * grid.half_width();
    const double r2max = radius * radius;
    const auto& lat = grid.lattice();
    return grid.cell_volume() * k::omp::exact_sum(v.size(), [&](std::size_t i) {
               double r2 = 0.0;
               for (int a = 0; a < d; ++a) {
                   double dx = grid.coordinate(lat.coord(i, a)) - center[std::size_t(a)];
                   dx -= box * std::round(dx / box);
                   r2 += dx * dx;
               }
               return r2 <= r2max ? std::norm(v[i]) : 0.0;
           });
}

BestCenter best_center(const Field& f, double radius) {
    require(radius > 0.0, ErrorKind::Parameter, "probe radius must be positive");
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    std::vector<double> density(f.size());
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = std::norm(f[i]);
    const auto offsets = k::ball_offsets(lat.dim, radius / grid.spacing());
    const auto sums = k::omp::window_sums(density, lat, offsets);
    double peak = -1.0;
    for (double s : sums) peak = std::max(peak, s);
    const double floor = peak - 1e-12 * std::abs(peak);
    std::size_t best = 0;
    while (sums[best] < floor) ++best;
    BestCenter out;
    out.index = best;
    out.coords = grid.coords_of(best);
    out.point = grid.position(best);
    out.windowed_mass = grid.cell_volume() * sums[best];
    return out;
}

ConcentrationCurve concentration_curve(const EvolutionTrace& trace, const GroundState& gs, const WindowSpec& spec) {
    require(spec.kappa > 0.0, ErrorKind::Parameter, "window constant kappa must be positive");
    require(spec.beta > 0.0 && spec.beta < 0.5, ErrorKind::Parameter, "window exponent beta must lie in (0, 1/2)");
    if (!trace.blowup) fail(ErrorKind::Precondition, "trace carries no blow-up estimate");
    require(!trace.checkpoints.empty(), ErrorKind::Precondition, "trace has no checkpoints");

    ConcentrationCurve curve;
    curve.t_star = spec.t_star.value_or(trace.blowup->t_star);
    curve.window_start = trace.blowup->t_a;
    if (!(curve.t_star > trace.checkpoints.back().t))
        fail(ErrorKind::InconsistentEstimate, "t_star does not exceed the last checkpoint time");

    const int d = trace.checkpoints.front().field.dimension();
    const std::vector<double> origin(std::size_t(d), 0.0);
    for (const auto& snap : trace.checkpoints) {
        ConcentrationRow row;
        row.t = snap.t;
        row.hardy = snap.hardy;
        row.rho = rho(gs, snap.field);
        row.a_t = spec.kappa * std::pow(curve.t_star - snap.t, spec.beta);
        row.center = origin;
        row.windowed_mass = windowed_mass(snap.field, origin, row.a_t);
        row.fraction = row.windowed_mass / gs.mass_sq;
        row.admissibility = row.a_t * std::sqrt(std::max(0.0, snap.hardy));
        curve.rows.push_back(std::move(row));
    }
    curve.admissibility_increasing = true;
    const ConcentrationRow* prev = nullptr;
    for (const auto& row : curve.rows) {
        if (row.t < curve.window_start) continue;
        if (prev && !(row.admissibility > prev->admissibility)) curve.admissibility_increasing = false;
        prev = &row;
    }
    return curve;
}

} // namespace hnls
