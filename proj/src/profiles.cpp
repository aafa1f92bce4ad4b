#include "hnls/profiles.hpp"

#include "hnls/concentration.hpp"
#include "hnls/errors.hpp"
#include "hnls/fft.hpp"
#include "hnls/functionals.hpp"
#include "hnls/samplers.hpp"

#include <algorithm>
#include <cmath>

namespace hnls {

namespace k = kernels;

namespace {

const CartesianGrid& common_grid(std::span<const Field> fields) {
    require(!fields.empty(), ErrorKind::Parameter, "empty field list");
    const auto& g = fields.front().cartesian_grid();
    for (const auto& f : fields)
        require(f.cartesian_grid().same_as(g), ErrorKind::Structural, "fields do not share a grid");
    return g;
}

// Minimum-image physical distance between two nodes.
double node_distance(const CartesianGrid& g, std::span<const int> a, std::span<const int> b) {
    const int m = g.points_per_axis();
    double r2 = 0.0;
    for (int ax = 0; ax < g.dimension(); ++ax) {
        int d = (a[std::size_t(ax)] - b[std::size_t(ax)]) % m;
        if (d < 0) d += m;
        if (d > m / 2) d -= m;
        const double x = d * g.spacing();
        r2 += x * x;
    }
    return std::sqrt(r2);
}

double node_distance(const CartesianGrid& g, std::size_t idx, std::span<const int> b) {
    const auto& lat = g.lattice();
    int c[3];
    for (int a = 0; a < lat.dim; ++a) c[a] = lat.coord(idx, a);
    return node_distance(g, std::span<const int>(c, std::size_t(lat.dim)), b);
}

LatticePoint wrap(const CartesianGrid& g, LatticePoint p) {
    const int m = g.points_per_axis();
    for (auto& c : p) {
        c %= m;
        if (c < 0) c += m;
    }
    return p;
}

LatticePoint minus(std::span<const int> a, std::span<const int> b) {
    LatticePoint out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

// Damps the top of the spectrum along each axis; modes below `start` of the
// Nyquist wavenumber are untouched.
Field mollify(const Field& f, double start) {
    const auto& grid = f.cartesian_grid();
    const auto& lat = grid.lattice();
    std::vector<cplx> F(f.values().begin(), f.values().end());
    fft::forward(F, lat);
    std::vector<double> axis(std::size_t(lat.points));
    for (int c = 0; c < lat.points; ++c) {
        const double eta = std::abs(fft::wavenumber(c, lat.points)) / (0.5 * lat.points);
        const double x = (eta - start) / (1.0 - start);
        axis[std::size_t(c)] = eta <= start ? 1.0 : std::exp(-36.0 * std::pow(x, 8));
    }
    const double inv = 1.0 / double(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
        double s = inv;
        for (int a = 0; a < lat.dim; ++a) s *= axis[std::size_t(lat.coord(i, a))];
        F[i] *= s;
    }
    fft::backward(F, lat);
    return Field(f.grid(), std::move(F));
}

Field subtract(const Field& a, const Field& b) { return a - b; }

} // namespace

Field gaussian_bubble(CartesianGridPtr grid, double amplitude, double width, std::span<const double> center) {
    require(width > 0.0, ErrorKind::Parameter, "bubble width must be positive");
    require(int(center.size()) == grid->dimension(), ErrorKind::Structural, "centre rank mismatch");
    const double box = 2.0 * grid->half_width();
    return Field::sample_cartesian(grid, [&](std::span<const double> x) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            double dx = x[a] - center[a];
            dx -= box * std::round(dx / box);
            r2 += dx * dx;
        }
        return cplx(amplitude * std::exp(-r2 / (2.0 * width * width)));
    });
}

Field broadband_noise(CartesianGridPtr grid, double l2_norm, std::uint64_t seed) {
    require(l2_norm >= 0.0, ErrorKind::Parameter, "noise norm must be nonnegative");
    Rng rng(seed);
    Field f = random_rough_cartesian(grid, rng);
    const double m = mass(f);
    return m > 0.0 ? f.scaled(l2_norm / std::sqrt(m)) : f;
}

LatticePoint profile_center(const Field& f, double probe_radius) { return best_center(f, probe_radius).coords; }

double rms_radius(const Field& f) {
    const auto& g = f.cartesian_grid();
    const auto c = profile_center(f);
    const double total = mass(f);
    require(total > 0.0, ErrorKind::DegenerateInput, "rms radius of a zero field");
    const double s = k::omp::exact_sum(f.size(), [&](std::size_t i) {
        const double r = node_distance(g, i, c);
        return r * r * std::norm(f[i]);
    });
    return std::sqrt(g.cell_volume() * s / total);
}

FieldSequence generate_synthetic(std::span<const Field> profiles, std::span<const std::vector<LatticePoint>> center_laws,
                                 const std::optional<Field>& noise, std::size_t n_seq) {
    require(n_seq >= 1, ErrorKind::Parameter, "sequence length must be positive");
    require(profiles.size() == center_laws.size(), ErrorKind::Parameter, "one centre law per profile");
    const auto& grid = common_grid(profiles);
    const int d = grid.dimension();
    if (noise) require(noise->cartesian_grid().same_as(grid), ErrorKind::Structural, "noise on a different grid");
    const LatticePoint ref(std::size_t(d), grid.points_per_axis() / 2);

    std::vector<LatticePoint> own;
    std::vector<double> radius;
    for (const auto& p : profiles) {
        own.push_back(profile_center(p));
        radius.push_back(rms_radius(p));
    }
    FieldSequence seq;
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        require(center_laws[j].size() >= n_seq, ErrorKind::Parameter, "centre law shorter than the sequence");
        GroundTruth gt{translate(profiles[j], minus(ref, own[j])), {}};
        for (std::size_t n = 0; n < n_seq; ++n) {
            require(int(center_laws[j][n].size()) == d, ErrorKind::Structural, "centre law rank mismatch");
            LatticePoint c(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) c[std::size_t(a)] = own[j][std::size_t(a)] + center_laws[j][n][std::size_t(a)];
            gt.centers.push_back(wrap(grid, c));
        }
        seq.truth.push_back(std::move(gt));
    }
    for (std::size_t n = 0; n < n_seq; ++n) {
        for (std::size_t j = 0; j < profiles.size(); ++j)
            for (std::size_t l = j + 1; l < profiles.size(); ++l) {
                const double sep = node_distance(grid, seq.truth[j].centers[n], seq.truth[l].centers[n]);
                if (sep < radius[j] + radius[l])
                    fail(ErrorKind::Parameter, "centre collision at n=" + std::to_string(n + 1) + ": separation " +
                                                   std::to_string(sep) + " below the summed rms radii " +
                                                   std::to_string(radius[j] + radius[l]));
            }
        std::optional<Field> v;
        for (std::size_t j = 0; j < profiles.size(); ++j) {
            Field placed = translate(profiles[j], center_laws[j][n]);
            v = v ? *v + placed : placed;
        }
        if (noise) v = *v + *noise;
        seq.entries.push_back(std::move(*v));
    }
    seq.noise = noise;
    double bound = 0.0;
    for (const auto& v : seq.entries) bound = std::max(bound, h1_norm(v));
    require(std::isfinite(bound), ErrorKind::DegenerateInput, "sequence is not bounded in H^1");
    return seq;
}

Field Decomposition::placed(std::size_t j, std::size_t n) const {
    return translate(profiles.at(j), minus(centers.at(j).at(n), reference));
}

double default_eta_min(const FieldSequence& seq) {
    double m = 0.0;
    for (const auto& v : seq.entries) m = std::max(m, h1_norm(v));
    return 1e-2 * m;
}

namespace {

struct Estimate {
    std::vector<LatticePoint> centers;
    Field profile;
    double norm;
};

Estimate estimate_profile(const std::vector<Field>& residuals, const LatticePoint& ref, const ExtractOptions& opts) {
    const auto& grid = residuals.front().cartesian_grid();
    const auto& lat = grid.lattice();
    std::vector<LatticePoint> centers;
    for (const auto& r : residuals) centers.push_back(best_center(r, opts.probe_radius).coords);
    const Field& last = residuals.back();
    const LatticePoint& xN = centers.back();

    // Other strong maxima of the window mass bound the cell kept for this profile.
    std::vector<double> density(last.size());
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = std::norm(last[i]);
    const auto offsets = k::ball_offsets(lat.dim, opts.probe_radius / grid.spacing());
    const auto sums = k::omp::window_sums(density, lat, offsets);
    const double peak = *std::max_element(sums.begin(), sums.end());
    std::vector<LatticePoint> rivals;
    const auto nbrs = k::ball_offsets(lat.dim, std::sqrt(double(lat.dim)) + 1e-9);
    for (std::size_t i = 0; i < sums.size(); ++i) {
        if (!(sums[i] >= opts.strong_fraction * peak) || peak <= 0.0) continue;
        bool is_max = true;
        for (const auto& off : nbrs) {
            std::size_t j = i;
            for (int a = 0; a < lat.dim; ++a)
                if (off[std::size_t(a)] != 0) j = lat.shifted(j, a, off[std::size_t(a)]);
            if (sums[j] > sums[i]) {
                is_max = false;
                break;
            }
        }
        if (!is_max) continue;
        auto c = grid.coords_of(i);
        if (node_distance(grid, c, xN) > 2.0 * opts.probe_radius) rivals.push_back(std::move(c));
    }
    std::vector<cplx> cell(last.values().begin(), last.values().end());
    if (!rivals.empty()) {
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const double own = node_distance(grid, i, xN);
            for (const auto& r : rivals)
                if (node_distance(grid, i, r) < own) {
                    cell[i] = 0.0;
                    break;
                }
        }
    }
    Field recentred = translate(Field(last.grid(), std::move(cell)), minus(ref, xN));
    Field profile = mollify(recentred, opts.filter_start);
    const double norm = h1_norm(profile);
    return {std::move(centers), std::move(profile), norm};
}

} // namespace

Decomposition extract_profiles(const FieldSequence& seq, std::size_t ell_max, double eta_min, const ExtractOptions& opts) {
    const auto& grid = common_grid(seq.entries);
    require(eta_min > 0.0, ErrorKind::Parameter, "eta_min must be positive");
    require(opts.probe_radius > 0.0, ErrorKind::Parameter, "probe radius must be positive");
    Decomposition dec;
    dec.originals = seq.entries;
    dec.residuals = seq.entries;
    dec.reference.assign(std::size_t(grid.dimension()), grid.points_per_axis() / 2);
    for (;;) {
        Estimate est = estimate_profile(dec.residuals, dec.reference, opts);
        dec.estimate_norms.push_back(est.norm);
        if (est.norm < eta_min) break;
        if (dec.ell == ell_max) {
            dec.truncated = true;
            break;
        }
        for (std::size_t n = 0; n < dec.residuals.size(); ++n)
            dec.residuals[n] = subtract(dec.residuals[n], translate(est.profile, minus(est.centers[n], dec.reference)));
        dec.profiles.push_back(std::move(est.profile));
        dec.centers.push_back(std::move(est.centers));
        ++dec.ell;
    }
    return dec;
}

double reconstruction_defect(const Decomposition& dec) {
    double worst = 0.0;
    for (std::size_t n = 0; n < dec.originals.size(); ++n) {
        Field acc = dec.originals[n];
        for (std::size_t j = 0; j < dec.ell; ++j) acc = subtract(acc, dec.placed(j, n));
        for (std::size_t i = 0; i < acc.size(); ++i) worst = std::max(worst, std::abs(acc[i] - dec.residuals[n][i]));
    }
    return worst;
}

DefectReport defect_report(const Decomposition& dec, double p) {
    require(!dec.originals.empty(), ErrorKind::Parameter, "empty decomposition");
    const auto& grid = dec.originals.front().cartesian_grid();
    const int d = grid.dimension();
    const double p_max = d > 2 ? 2.0 * d / (d - 2.0) : std::numeric_limits<double>::infinity();
    require(p > 2.0 && p < p_max, ErrorKind::Parameter, "p must lie in (2, 2d/(d-2))");
    DefectReport rep;
    rep.p = p;
    std::vector<double> profile_mass;
    for (const auto& V : dec.profiles) profile_mass.push_back(mass(V));
    for (std::size_t n = 0; n < dec.originals.size(); ++n) {
        DefectRow row;
        row.n = n + 1;
        const Field& v = dec.originals[n];
        const Field& res = dec.residuals[n];
        row.mass = mass(v);
        double msum = mass(res), hsum = hardy_functional(res);
        for (std::size_t j = 0; j < dec.ell; ++j) {
            msum += profile_mass[j];
            hsum += hardy_functional(dec.placed(j, n));
        }
        row.pythagorean_defect = std::abs(row.mass - msum);
        row.hardy_defect = std::abs(hardy_functional(v) - hsum);
        row.residual_lp = lp_norm(res, p);
        double sep = 0.0;
        bool first = true;
        for (std::size_t j = 0; j < dec.ell; ++j)
            for (std::size_t l = j + 1; l < dec.ell; ++l) {
                const double s = node_distance(grid, dec.centers[j][n], dec.centers[l][n]);
                sep = first ? s : std::min(sep, s);
                first = false;
            }
        row.min_separation = sep;
        rep.rows.push_back(row);
    }
    return rep;
}

double cross_term(const Field& V, const Field& w, std::span<const int> shift) {
    require(V.is_cartesian() && w.is_cartesian() && V.same_grid(w), ErrorKind::Structural,
            "cross term needs Cartesian fields on a common grid");
    const Field Vs = translate(V, shift);
    const auto& g = w.cartesian_grid();
    const auto inv = g.inverse_radius_sq();
    return g.cell_volume() *
           k::omp::exact_sum(w.size(), [&](std::size_t i) { return (Vs[i] * std::conj(w[i])).real() * inv[i]; });
}

double cross_term_continuous(const Field& V, const Field& w, std::span<const double> shift) {
    require(V.is_cartesian() && w.is_cartesian() && V.same_grid(w), ErrorKind::Structural,
            "cross term needs Cartesian fields on a common grid");
    const Field Vs = translate_continuous(V, shift);
    const auto& g = w.cartesian_grid();
    const auto inv = g.inverse_radius_sq();
    return g.cell_volume() *
           k::omp::exact_sum(w.size(), [&](std::size_t i) { return (Vs[i] * std::conj(w[i])).real() * inv[i]; });
}

double cross_term_bound(const Field& V, const Field& w, std::span<const int> shift, double R) {
    require(R > 0.0, ErrorKind::Parameter, "support radius must be positive");
    const Field Vs = translate(V, shift);
    const auto& g = w.cartesian_grid();
    return g.cell_volume() * k::omp::exact_sum(w.size(), [&](std::size_t i) { return std::abs(Vs[i]) * std::abs(w[i]); }) /
           (R * R);
}

Lemma22Result lemma22_harness(const FieldSequence& seq, const GroundState& gs, std::size_t ell_max, double tolerance,
                              const ExtractOptions& opts) {
    const auto& grid = common_grid(seq.entries);
    const int d = grid.dimension();
    require(d == gs.d, ErrorKind::Parameter, "ground state dimension differs from the sequence's");
    require(tolerance >= 0.0 && tolerance < 1.0, ErrorKind::Parameter, "tolerance must lie in [0, 1)");
    const double pc = critical_exponent(d);
    Lemma22Result out;
    out.tolerance = tolerance;
    out.q_norm = std::sqrt(gs.mass_sq);
    for (std::size_t n = seq.entries.size() / 2; n < seq.entries.size(); ++n) {
        out.m = std::max(out.m, lp_norm(seq.entries[n], pc));
        out.M = std::max(out.M, hardy_functional(seq.entries[n]));
    }
    if (!(out.M > 0.0)) fail(ErrorKind::DegenerateInput, "sequence has nonpositive Hardy functional");
    out.bound = std::pow(d / (d + 2.0), d / 4.0) * std::pow(out.m, d / 2.0 + 1.0) * std::pow(out.M, -d / 4.0) * out.q_norm;

    out.decomposition = extract_profiles(seq, ell_max, default_eta_min(seq), opts);
    out.truncated = out.decomposition.truncated;
    double max_mass = 0.0;
    for (const auto& V : out.decomposition.profiles) {
        const double m = mass(V);
        max_mass = std::max(max_mass, m);
        out.gn_sum += lp_power(V, pc);
    }
    out.profile_norm = std::sqrt(max_mass);
    out.gn_cap = gs.sharp_constant * std::pow(max_mass, 2.0 / d) * out.M;
    out.pass = out.profile_norm >= (1.0 - tolerance) * out.bound;
    return out;
}

} // namespace hnls
