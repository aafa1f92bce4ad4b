#include "hnls/grids.hpp"

#include "hnls/errors.hpp"
#include "hnls/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hnls {

namespace k = kernels;

double hardy_constant(int d) { return 0.25 * double(d - 2) * double(d - 2); }

double sphere_measure(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// --- RadialGrid ------------------------------------------------------------

double RadialGrid::default_r_min(int dimension, double coupling) {
    const double kappa = std::sqrt(hardy_constant(dimension) - coupling);
    // g^2 ~ exp(2 kappa s) <= 1e-14 at the inner edge, capped at s = -80.
    const double s_min = std::max(-80.0, std::log(1e-14) / (2.0 * kappa));
    return std::exp(s_min);
}

std::shared_ptr<const RadialGrid> RadialGrid::make(int dimension, double coupling, std::size_t nodes,
                                                   double r_max, double r_min) {
    require(dimension >= 3, ErrorKind::Parameter, "radial grid needs d >= 3");
    const double cstar = hardy_constant(dimension);
    require(coupling > 0.0 && coupling < cstar, ErrorKind::Parameter,
            "coupling c must lie in (0, (d-2)^2/4)");
    require(nodes >= 16, ErrorKind::Parameter, "radial grid needs at least 16 nodes");
    require(r_max > 0.0 && std::isfinite(r_max), ErrorKind::Parameter, "r_max must be positive");
    if (r_min <= 0.0) r_min = default_r_min(dimension, coupling);
    require(r_min < r_max, ErrorKind::Parameter, "r_min must be below r_max");
    return make_log(dimension, coupling, nodes, std::log(r_min), r_max);
}

std::shared_ptr<const RadialGrid> RadialGrid::make_log(int dimension, double coupling, std::size_t nodes,
                                                       double s_min, double r_max) {
    require(dimension >= 3, ErrorKind::Parameter, "radial grid needs d >= 3");
    require(coupling > 0.0 && coupling < hardy_constant(dimension), ErrorKind::Parameter,
            "coupling c must lie in (0, (d-2)^2/4)");
    require(nodes >= 16, ErrorKind::Parameter, "radial grid needs at least 16 nodes");
    require(std::isfinite(s_min) && r_max > 0.0 && s_min < std::log(r_max), ErrorKind::Parameter,
            "radial grid needs r_min < r_max");
    std::shared_ptr<RadialGrid> g(new RadialGrid());
    g->d_ = dimension;
    g->c_ = coupling;
    g->s_min_ = s_min;
    g->ds_ = (std::log(r_max) - g->s_min_) / double(nodes - 1);
    g->r_.resize(nodes);
    g->w_.resize(nodes);
    g->lift_.resize(nodes);
    const double sigma = sphere_measure(dimension);
    const double alpha = 0.5 * (dimension - 2);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double s = g->log_radius(i);
        g->r_[i] = std::exp(s);
        g->w_[i] = sigma * std::exp(dimension * s) * g->ds_;
        g->lift_[i] = std::exp(alpha * s);
    }
    g->r_.back() = r_max;
    return g;
}

double RadialGrid::kappa() const { return std::sqrt(critical_coupling() - c_); }

cplx RadialGrid::neg_second_derivative_at(std::span<const cplx> g, std::size_t i) const {
    const std::size_t n = g.size();
    auto at = [&](std::ptrdiff_t j) -> cplx {
        return (j < 0 || j >= std::ptrdiff_t(n)) ? cplx(0.0) : g[std::size_t(j)];
    };
    const auto ii = std::ptrdiff_t(i);
    const cplx v = at(ii - 2) - 16.0 * at(ii - 1) + 30.0 * g[i] - 16.0 * at(ii + 1) + at(ii + 2);
    return v / (12.0 * ds_ * ds_);
}

void RadialGrid::apply_neg_second_derivative(std::span<const cplx> g, std::span<cplx> out) const {
    require(g.size() == size() && out.size() == size(), ErrorKind::Structural,
            "reduced field length does not match the radial grid");
    const auto n = std::ptrdiff_t(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[std::size_t(i)] = neg_second_derivative_at(g, std::size_t(i));
}

cplx RadialGrid::interpolate_reduced(std::span<const cplx> g, double s) const {
    const double x = (s - s_min_) / ds_;
    const auto n = std::ptrdiff_t(g.size());
    if (!(x > -2.0 && x < double(n + 1))) return 0.0;
    const auto i = std::ptrdiff_t(std::floor(x));
    const double t = x - double(i);
    auto at = [&](std::ptrdiff_t j) -> cplx { return (j < 0 || j >= n) ? cplx(0.0) : g[std::size_t(j)]; };
    if (t == 0.0) return at(i);
    const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return wm * at(i - 1) + w0 * at(i) + w1 * at(i + 1) + w2 * at(i + 2);
}

bool RadialGrid::same_as(const RadialGrid& o) const {
    return this == &o || (d_ == o.d_ && c_ == o.c_ && s_min_ == o.s_min_ && ds_ == o.ds_ &&
                          r_.size() == o.r_.size() && r_.back() == o.r_.back());
}

// --- CartesianGrid ---------------------------------------------------------

std::shared_ptr<const CartesianGrid> CartesianGrid::make(int dimension, int points_per_axis,
                                                         double half_width, double coupling) {
    require(dimension >= 1 && dimension <= 3, ErrorKind::Parameter, "Cartesian grid supports d in 1..3");
    require(points_per_axis >= 4 && points_per_axis % 2 == 0, ErrorKind::Parameter,
            "points per axis must be even and >= 4");
    require(half_width > 0.0, ErrorKind::Parameter, "box half-width must be positive");
    require(coupling >= 0.0 && (coupling < hardy_constant(dimension) || coupling == 0.0),
            ErrorKind::Parameter, "coupling c must lie in [0, (d-2)^2/4)");
    std::shared_ptr<CartesianGrid> g(new CartesianGrid());
    g->lat_ = k::Lattice{dimension, points_per_axis};
    g->L_ = half_width;
    g->h_ = 2.0 * half_width / points_per_axis;
    g->c_ = coupling;
    g->inv_r2_.resize(g->lat_.size());
    for (std::size_t i = 0; i < g->inv_r2_.size(); ++i) {
        double r2 = 0.0;
        for (int a = 0; a < dimension; ++a) {
            const double x = g->coordinate(g->lat_.coord(i, a));
            r2 += x * x;
        }
        g->inv_r2_[i] = 1.0 / r2;
    }
    return g;
}

double CartesianGrid::cell_volume() const { return std::pow(h_, dimension()); }

std::vector<double> CartesianGrid::position(std::size_t idx) const {
    std::vector<double> x(static_cast<std::size_t>(dimension()));
    for (int a = 0; a < dimension(); ++a) x[std::size_t(a)] = coordinate(lat_.coord(idx, a));
    return x;
}

std::size_t CartesianGrid::index_of(std::span<const int> coords) const {
    require(int(coords.size()) == dimension(), ErrorKind::Structural, "coordinate rank mismatch");
    std::size_t idx = 0;
    for (int a = 0; a < dimension(); ++a) {
        int c = coords[std::size_t(a)] % lat_.points;
        if (c < 0) c += lat_.points;
        idx = idx * std::size_t(lat_.points) + std::size_t(c);
    }
    return idx;
}

std::vector<int> CartesianGrid::coords_of(std::size_t idx) const {
    std::vector<int> c(static_cast<std::size_t>(dimension()));
    for (int a = 0; a < dimension(); ++a) c[std::size_t(a)] = lat_.coord(idx, a);
    return c;
}

bool CartesianGrid::same_as(const CartesianGrid& o) const {
    return this == &o || (lat_.dim == o.lat_.dim && lat_.points == o.lat_.points && L_ == o.L_ && c_ == o.c_);
}

// --- Field -----------------------------------------------------------------

namespace {

std::size_t grid_size(const GridHandle& g) {
    return std::visit([](const auto& p) { return p ? p->size() : std::size_t(0); }, g);
}

} // namespace

Field::Field(GridHandle grid, std::vector<cplx> values, bool post_blowup)
    : grid_(std::move(grid)), values_(std::move(values)), post_blowup_(post_blowup) {
    const bool null_grid = std::visit([](const auto& p) { return p == nullptr; }, grid_);
    require(!null_grid, ErrorKind::Structural, "field without a grid");
    require(values_.size() == grid_size(grid_), ErrorKind::Structural,
            "field length " + std::to_string(values_.size()) + " does not match grid node count " +
                std::to_string(grid_size(grid_)));
    if (!post_blowup_) {
        for (const auto& v : values_)
            require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::Structural,
                    "field contains non-finite samples");
    }
}

Field Field::zeros(GridHandle grid) {
    const std::size_t n = grid_size(grid);
    return Field(std::move(grid), std::vector<cplx>(n, 0.0));
}

Field Field::sample_radial(RadialGridPtr grid, const std::function<cplx(double)>& f) {
    std::vector<cplx> v(grid->size());
    const auto r = grid->radii();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(r[i]);
    return Field(std::move(grid), std::move(v));
}

Field Field::sample_cartesian(CartesianGridPtr grid, const std::function<cplx(std::span<const double>)>& f) {
    std::vector<cplx> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto x = grid->position(i);
        v[i] = f(x);
    }
    return Field(std::move(grid), std::move(v));
}

Field Field::from_reduced(RadialGridPtr grid, std::span<const cplx> g) {
    require(g.size() == grid->size(), ErrorKind::Structural, "reduced field length mismatch");
    std::vector<cplx> v(g.size());
    const auto lift = grid->lift();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = g[i] / lift[i];
    return Field(std::move(grid), std::move(v));
}

const RadialGrid& Field::radial_grid() const { return *radial_grid_ptr(); }
const CartesianGrid& Field::cartesian_grid() const { return *cartesian_grid_ptr(); }

RadialGridPtr Field::radial_grid_ptr() const {
    if (!is_radial()) fail(ErrorKind::UnsupportedOperation, "operation requires a radial field");
    return std::get<RadialGridPtr>(grid_);
}

CartesianGridPtr Field::cartesian_grid_ptr() const {
    if (!is_cartesian()) fail(ErrorKind::UnsupportedOperation, "operation requires a Cartesian field");
    return std::get<CartesianGridPtr>(grid_);
}

int Field::dimension() const {
    return std::visit([](const auto& p) { return p->dimension(); }, grid_);
}

double Field::coupling() const {
    return std::visit([](const auto& p) { return p->coupling(); }, grid_);
}

std::vector<cplx> Field::reduced() const {
    const auto& g = radial_grid();
    std::vector<cplx> out(values_.size());
    const auto lift = g.lift();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] * lift[i];
    return out;
}

Field Field::scaled(cplx factor) const {
    std::vector<cplx> v(values_);
    for (auto& x : v) x *= factor;
    return Field(grid_, std::move(v), post_blowup_);
}

Field Field::modulus() const {
    std::vector<cplx> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(values_[i]);
    return Field(grid_, std::move(v), post_blowup_);
}

bool Field::same_grid(const Field& o) const {
    if (is_radial() != o.is_radial()) return false;
    if (is_radial()) return radial_grid().same_as(o.radial_grid());
    return cartesian_grid().same_as(o.cartesian_grid());
}

Field operator+(const Field& a, const Field& b) {
    require(a.same_grid(b), ErrorKind::Structural, "fields live on different grids");
    std::vector<cplx> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
    return Field(a.grid(), std::move(v));
}

Field operator-(const Field& a, const Field& b) {
    require(a.same_grid(b), ErrorKind::Structural, "fields live on different grids");
    std::vector<cplx> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
    return Field(a.grid(), std::move(v));
}

// --- integrals ---------------------------------------------------------------

double quadrature(const Field& f) {
    const auto v = f.values();
    if (f.is_radial()) {
        const auto w = f.radial_grid().weights();
        return k::omp::exact_sum(v.size(), [&](std::size_t i) { return w[i] * v[i].real(); });
    }
    const double vol = f.cartesian_grid().cell_volume();
    return vol * k::omp::exact_sum(v.size(), [&](std::size_t i) { return v[i].real(); });
}

double gradient_norm_sq(const Field& f) {
    if (f.is_radial()) {
        const auto& grid = f.radial_grid();
        const auto g = f.reduced();
        const double cstar = grid.critical_coupling();
        const double s = k::omp::exact_sum(g.size(), [&](std::size_t i) {
            return (std::conj(g[i]) * grid.neg_second_derivative_at(g, i)).real() + cstar * std::norm(g[i]);
        });
        return sphere_measure(grid.dimension()) * grid.log_step() * s;
    }
    const auto& grid = f.cartesian_grid();
    const double h = grid.spacing();
    return std::pow(h, grid.dimension() - 2) * k::omp::lattice_difference_energy(f.values(), grid.lattice());
}

double gradient_norm_sq_spectral(const Field& f) {
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    std::vector<cplx> F(f.values().begin(), f.values().end());
    fft::forward(F, lat);
    const double h = grid.spacing();
    std::vector<double> mult_axis(std::size_t(lat.points));
    for (int m = 0; m < lat.points; ++m) {
        const double sn = std::sin(std::numbers::pi * m / lat.points);
        mult_axis[std::size_t(m)] = 4.0 * sn * sn / (h * h);
    }
    const double s = k::omp::exact_sum(F.size(), [&](std::size_t i) {
        double m = 0.0;
        for (int a = 0; a < lat.dim; ++a) m += mult_axis[std::size_t(lat.coord(i, a))];
        return m * std::norm(F[i]);
    });
    return grid.cell_volume() * s / double(F.size());
}

double potential_integral(const Field& f) {
    const auto v = f.values();
    if (f.is_radial()) {
        const auto& grid = f.radial_grid();
        const auto lift = grid.lift();
        // |u|^2 r^{d-2} = |g|^2
        const double s = k::omp::exact_sum(v.size(), [&](std::size_t i) {
            const double gi = std::abs(v[i]) * lift[i];
            return gi * gi;
        });
        return sphere_measure(grid.dimension()) * grid.log_step() * s;
    }
    const auto& grid = f.cartesian_grid();
    const auto inv = grid.inverse_radius_sq();
    return grid.cell_volume() * k::omp::exact_sum(v.size(), [&](std::size_t i) { return std::norm(v[i]) * inv[i]; });
}

// --- translations ------------------------------------------------------------

Field translate(const Field& f, std::span<const int> shift) {
    if (!f.is_cartesian()) fail(ErrorKind::UnsupportedOperation, "translate requires a Cartesian field");
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    require(int(shift.size()) == lat.dim, ErrorKind::Structural, "shift rank mismatch");
    std::vector<cplx> out(f.size());
    const auto v = f.values();
    const auto n = std::ptrdiff_t(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        std::size_t src = std::size_t(ii);
        for (int a = 0; a < lat.dim; ++a)
            if (shift[std::size_t(a)] != 0) src = lat.shifted(src, a, -shift[std::size_t(a)]);
        out[std::size_t(ii)] = v[src];
    }
    return Field(f.grid(), std::move(out));
}

Field translate_continuous(const Field& f, std::span<const double> shift) {
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    require(int(shift.size()) == lat.dim, ErrorKind::Structural, "shift rank mismatch");
    std::vector<cplx> F(f.values().begin(), f.values().end());
    fft::forward(F, lat);
    const double dk = std::numbers::pi / grid.half_width();
    for (std::size_t i = 0; i < F.size(); ++i) {
        cplx phase = 1.0;
        for (int a = 0; a < lat.dim; ++a) {
            const int c = lat.coord(i, a);
            const double arg = dk * fft::wavenumber(c, lat.points) * shift[std::size_t(a)];
            // The Nyquist mode is its own conjugate partner; a real multiplier
            // keeps real fields real.
            phase *= (2 * c == lat.points) ? cplx(std::cos(arg)) : std::polar(1.0, -arg);
        }
        F[i] *= phase;
    }
    fft::backward(F, lat);
    const double inv = 1.0 / double(F.size());
    for (auto& x : F) x *= inv;
    return Field(f.grid(), std::move(F));
}

// --- rescaling ---------------------------------------------------------------

namespace {

double periodic_sinc(double theta, int m) {
    const double half = 0.5 * theta;
    const double sh = std::sin(half);
    if (std::abs(sh) < 1e-14) return 1.0;
    return std::sin(m * half) * std::cos(half) / (m * sh);
}

RescaleResult rescale_radial(const Field& f, double lambda) {
    const auto gp = f.radial_grid_ptr();
    const auto& grid = *gp;
    const auto g = f.reduced();
    const double shift = std::log(lambda) / grid.log_step();
    std::vector<cplx> out(g.size());
    const auto n = std::ptrdiff_t(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double s = grid.log_radius(std::size_t(i)) + shift * grid.log_step();
        out[std::size_t(i)] = lambda * grid.interpolate_reduced(g, s);
    }
    // Mass of f on the part of the grid that no longer maps into the domain.
    const auto w = grid.weights();
    const auto v = f.values();
    const double lo = shift, hi = double(g.size() - 1) + shift;
    const double lost = k::omp::exact_sum(v.size(), [&](std::size_t i) {
        const double x = double(i);
        return (x < lo || x > hi) ? w[i] * std::norm(v[i]) : 0.0;
    });
    const double total = k::omp::exact_sum(v.size(), [&](std::size_t i) { return w[i] * std::norm(v[i]); });
    RescaleResult res{Field::from_reduced(gp, out), false};
    res.under_resolved = total > 0.0 && lost > 1e-8 * total;
    return res;
}

RescaleResult rescale_cartesian(const Field& f, double lambda) {
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    const int m = lat.points;
    const double L = grid.half_width();
    std::vector<double> T(std::size_t(m) * std::size_t(m));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double theta = std::numbers::pi * (lambda * grid.coordinate(a) - grid.coordinate(b)) / L;
            T[std::size_t(a) * std::size_t(m) + std::size_t(b)] = periodic_sinc(theta, m);
        }
    std::vector<cplx> cur(f.values().begin(), f.values().end()), next(cur.size());
    for (int axis = 0; axis < lat.dim; ++axis) {
        const std::size_t st = lat.stride(axis);
        const auto n = std::ptrdiff_t(cur.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
            const auto i = std::size_t(ii);
            const int a = lat.coord(i, axis);
            const std::size_t base = i - std::size_t(a) * st;
            cplx acc = 0.0;
            const double* row = &T[std::size_t(a) * std::size_t(m)];
            for (int b = 0; b < m; ++b) acc += row[b] * cur[base + std::size_t(b) * st];
            next[i] = acc;
        }
        std::swap(cur, next);
    }
    const double amp = std::pow(lambda, 0.5 * lat.dim);
    for (auto& x : cur) x *= amp;

    // Resolution audit: content pushed outside the box (lambda < 1) or above
    // the Nyquist band (lambda > 1).
    const auto v = f.values();
    const double total = k::omp::exact_sum(v.size(), [&](std::size_t i) { return std::norm(v[i]); });
    double lost = 0.0;
    if (lambda < 1.0) {
        lost = k::omp::exact_sum(v.size(), [&](std::size_t i) {
            for (int a = 0; a < lat.dim; ++a)
                if (std::abs(grid.coordinate(lat.coord(i, a))) > lambda * L) return std::norm(v[i]);
            return 0.0;
        });
    } else if (lambda > 1.0) {
        std::vector<cplx> F(v.begin(), v.end());
        fft::forward(F, lat);
        const double kcut = 0.5 * m / lambda;
        lost = k::omp::exact_sum(F.size(), [&](std::size_t i) {
                   for (int a = 0; a < lat.dim; ++a)
                       if (std::abs(fft::wavenumber(lat.coord(i, a), m)) > kcut) return std::norm(F[i]);
                   return 0.0;
               }) /
               double(F.size());
    }
    RescaleResult res{Field(f.grid(), std::move(cur)), false};
    res.under_resolved = total > 0.0 && lost > 1e-8 * total;
    return res;
}

} // namespace

RescaleResult rescale(const Field& f, double lambda) {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::Parameter, "rescale factor must be positive");
    if (lambda == 1.0) return {f, false};
    return f.is_radial() ? rescale_radial(f, lambda) : rescale_cartesian(f, lambda);
}

cplx radial_value(const Field& f, double r) {
    const auto& grid = f.radial_grid();
    require(r > 0.0, ErrorKind::Parameter, "radius must be positive");
    const auto g = f.reduced();
    const double alpha = 0.5 * (grid.dimension() - 2);
    return grid.interpolate_reduced(g, std::log(r)) / std::pow(r, alpha);
}

Field taper_radial(const Field& f, double r0, double r1) {
    const auto gp = f.radial_grid_ptr();
    require(r0 > 0.0 && r1 > r0, ErrorKind::Parameter, "taper needs 0 < r0 < r1");
    std::vector<cplx> v(f.values().begin(), f.values().end());
    const auto r = gp->radii();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (r[i] >= r1) v[i] = 0.0;
        else if (r[i] > r0) {
            const double c = std::cos(0.5 * std::numbers::pi * (r[i] - r0) / (r1 - r0));
            v[i] *= c * c;
        }
    }
    return Field(gp, std::move(v));
}

Field radial_to_cartesian(const Field& f, CartesianGridPtr grid) {
    const auto& rg = f.radial_grid();
    require(rg.dimension() == grid->dimension(), ErrorKind::Structural, "dimension mismatch in export");
    const auto g = f.reduced();
    const double alpha = 0.5 * (rg.dimension() - 2);
    const auto inv = grid->inverse_radius_sq();
    std::vector<cplx> out(grid->size());
    const auto n = std::ptrdiff_t(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double r2 = 1.0 / inv[std::size_t(i)];
        const double s = 0.5 * std::log(r2);
        out[std::size_t(i)] = rg.interpolate_reduced(g, s) * std::exp(-alpha * s);
    }
    return Field(grid, std::move(out));
}

} // namespace hnls
