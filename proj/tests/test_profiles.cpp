#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"
#include "hnls/profiles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hnls;
using test::rel;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

CartesianGridPtr small_grid() { return CartesianGrid::make(3, 32, 8.0, 0.1); }

std::vector<double> ref_point(const CartesianGrid& g) { return std::vector<double>(3, g.coordinate(g.points_per_axis() / 2)); }

// Two bubbles, the second moving away along the diagonal by (offset + n) cells.
FieldSequence two_bubbles(CartesianGridPtr g, std::size_t n_seq, int offset, const std::optional<Field>& noise = {}) {
    const auto c0 = ref_point(*g);
    std::vector<Field> bubbles{gaussian_bubble(g, 1.0, 1.0, c0), gaussian_bubble(g, 0.8, 1.0, c0)};
    std::vector<std::vector<LatticePoint>> laws(2);
    for (std::size_t n = 1; n <= n_seq; ++n) {
        laws[0].push_back(LatticePoint(3, 0));
        laws[1].push_back(LatticePoint(3, offset + int(n)));
    }
    return generate_synthetic(bubbles, laws, noise, n_seq);
}

int cells_apart(const CartesianGrid& g, const LatticePoint& a, const LatticePoint& b) {
    int worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        int d = std::abs(a[i] - b[i]) % g.points_per_axis();
        worst = std::max(worst, std::min(d, g.points_per_axis() - d));
    }
    return worst;
}

// Smooth bump supported in |x - c| < R.
Field compact_bump(CartesianGridPtr g, std::span<const double> c, double R) {
    const std::vector<double> cc(c.begin(), c.end());
    return Field::sample_cartesian(g, [=](std::span<const double> x) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) r2 += (x[a] - cc[a]) * (x[a] - cc[a]);
        const double r = std::sqrt(r2) / R;
        return cplx(r < 1.0 ? std::pow(std::cos(std::numbers::pi * r / 2), 2) : 0.0);
    });
}

} // namespace

TEST_CASE("generator: a static profile gives a constant sequence") {
    auto g = small_grid();
    const auto V = gaussian_bubble(g, 1.0, 1.2, ref_point(*g));
    std::vector<Field> profiles{V};
    std::vector<std::vector<LatticePoint>> laws{std::vector<LatticePoint>(4, LatticePoint(3, 0))};
    const auto seq = generate_synthetic(profiles, laws, std::nullopt, 4);
    REQUIRE(seq.entries.size() == 4);
    for (const auto& v : seq.entries)
        for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(v[i] == V[i]);
    REQUIRE(seq.truth.size() == 1);
}

TEST_CASE("generator rejects colliding bubbles") {
    auto g = small_grid();
    CHECK(kind_of([&] { two_bubbles(g, 4, 0); }) == ErrorKind::Parameter);
    CHECK_NOTHROW(two_bubbles(g, 4, 4));
}

TEST_CASE("generator: mass splits up to an overlap that decays with separation") {
    auto g = small_grid();
    const auto seq = two_bubbles(g, 8, 3);
    double prev = 1e300;
    for (std::size_t n = 0; n < seq.entries.size(); ++n) {
        double parts = 0.0;
        for (const auto& t : seq.truth) parts += mass(t.profile);
        const double overlap = std::abs(mass(seq.entries[n]) - parts);
        CHECK(overlap < prev);
        prev = overlap;
    }
    CHECK(prev < 1e-8 * mass(seq.entries.back()));
}

TEST_CASE("single static bubble is recovered exactly") {
    // Finer lattice: the bubble must be resolved well below the mollifier band.
    auto g = CartesianGrid::make(3, 48, 8.0, 0.1);
    const auto V = gaussian_bubble(g, 1.0, 1.0, ref_point(*g));
    std::vector<Field> profiles{V};
    std::vector<std::vector<LatticePoint>> laws{std::vector<LatticePoint>(4, LatticePoint{2, -3, 1})};
    const auto seq = generate_synthetic(profiles, laws, std::nullopt, 4);
    const auto dec = extract_profiles(seq, 3, default_eta_min(seq));
    REQUIRE(dec.ell == 1);
    CHECK_FALSE(dec.truncated);
    CHECK(reconstruction_defect(dec) == 0.0);
    CHECK(cells_apart(*g, dec.centers[0].back(), seq.truth[0].centers.back()) == 0);
    double worst = 0.0;
    for (const auto& r : dec.residuals)
        for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i]));
    CHECK(worst < 1e-10);
    const auto rep = defect_report(dec, critical_exponent(3));
    for (const auto& row : rep.rows) {
        CHECK(row.pythagorean_defect < 1e-10);
        CHECK(row.hardy_defect < 1e-10);
        CHECK(row.residual_lp < 1e-10);
    }
}

TEST_CASE("two escaping bubbles: recovery and decaying defects") {
    auto g = small_grid();
    const auto seq = two_bubbles(g, 10, 3);
    const auto dec = extract_profiles(seq, 4, default_eta_min(seq));
    REQUIRE(dec.ell == 2);
    CHECK(reconstruction_defect(dec) == 0.0);
    for (const auto& gt : seq.truth) {
        std::size_t j = cells_apart(*g, dec.centers[0].back(), gt.centers.back()) <= 1 ? 0 : 1;
        for (std::size_t n = 0; n < seq.entries.size(); ++n) CHECK(cells_apart(*g, dec.centers[j][n], gt.centers[n]) <= 1);
        CHECK(rel(mass(dec.profiles[j]), mass(gt.profile)) < 1e-2);
    }
    const auto rep = defect_report(dec, critical_exponent(3));
    const auto& last = rep.rows.back();
    CHECK(last.pythagorean_defect < 1e-3 * last.mass);
    for (std::size_t n = rep.rows.size() / 2 + 1; n < rep.rows.size(); ++n) {
        CHECK(rep.rows[n].pythagorean_defect < rep.rows[n - 1].pythagorean_defect);
        CHECK(rep.rows[n].hardy_defect < rep.rows[n - 1].hardy_defect);
        CHECK(rep.rows[n].min_separation > rep.rows[n - 1].min_separation);
    }
}

TEST_CASE("extraction stops at ell_max and flags truncation") {
    auto g = small_grid();
    const auto seq = two_bubbles(g, 6, 3);
    const auto dec = extract_profiles(seq, 1, default_eta_min(seq));
    CHECK(dec.ell == 1);
    CHECK(dec.truncated);
    CHECK(reconstruction_defect(dec) == 0.0);
}

TEST_CASE("pure noise below the threshold yields no profile") {
    auto g = small_grid();
    FieldSequence seq;
    const auto w = broadband_noise(g, 0.05, test::kSeed);
    CHECK(std::sqrt(mass(w)) == doctest::Approx(0.05).epsilon(1e-12));
    seq.entries.assign(3, w);
    const auto dec = extract_profiles(seq, 4, 1.1 * h1_norm(w));
    CHECK(dec.ell == 0);
    CHECK_FALSE(dec.truncated);
    for (const auto& r : dec.residuals)
        for (std::size_t i = 0; i < r.size(); ++i) REQUIRE(r[i] == w[i]);
}

TEST_CASE("noisy two-bubble sequence: residual at the noise floor") {
    auto g = small_grid();
    const auto w = broadband_noise(g, 0.05, test::kSeed);
    const auto seq = two_bubbles(g, 8, 3, w);
    const auto dec = extract_profiles(seq, 4, default_eta_min(seq));
    CHECK(dec.ell == 2);
    const double p = critical_exponent(3);
    const auto rep = defect_report(dec, p);
    CHECK(rep.rows.back().residual_lp <= 2 * lp_norm(w, p));
}

TEST_CASE("defect report exponent range") {
    auto g = small_grid();
    const auto seq = two_bubbles(g, 4, 4);
    const auto dec = extract_profiles(seq, 2, default_eta_min(seq));
    CHECK(kind_of([&] { defect_report(dec, 2.0); }) == ErrorKind::Parameter);
    CHECK(kind_of([&] { defect_report(dec, 6.0); }) == ErrorKind::Parameter);
    CHECK_NOTHROW(defect_report(dec, 5.9));
}

TEST_CASE("cross term: zero partner and domination for escaping centres") {
    auto g = CartesianGrid::make(3, 48, 12.0, 0.1);
    const auto ref = ref_point(*g);
    const double R = 1.5;
    const auto V = compact_bump(g, ref, R);
    const LatticePoint far{8, 0, 0};
    CHECK(cross_term(V, Field::zeros(g), far) == 0.0);
    Rng rng(test::kSeed);
    for (int trial = 0; trial < 10; ++trial) {
        // Random phases node by node: the sign of the cross term is arbitrary,
        // but the domination bound must hold exactly.
        const auto w = random_rough_cartesian(g, rng);
        LatticePoint shift(3);
        for (auto& s : shift) s = int(uniform(rng, -20.0, 20.0));
        std::vector<double> x(3);
        for (int a = 0; a < 3; ++a) x[std::size_t(a)] = ref[std::size_t(a)] + shift[std::size_t(a)] * g->spacing();
        if (std::hypot(x[0], x[1], x[2]) < 2 * R) continue;
        CHECK(std::abs(cross_term(V, w, shift)) <= cross_term_bound(V, w, shift, R) * (1 + 1e-8));
    }
}

TEST_CASE("cross term decays at least like 1/|x_n|^2") {
    auto g = CartesianGrid::make(3, 80, 20.0, 0.1);
    const auto ref = ref_point(*g);
    const double R = 1.0;
    const auto V = compact_bump(g, ref, R);
    Rng rng(test::kSeed + 3);
    const auto w = Field::sample_cartesian(g, [](std::span<const double>) { return cplx(1.0); })
                       .scaled(std::polar(1.0, uniform(rng, 0.0, 1.0)));
    double prev = 0.0, prev_x = 0.0;
    for (int k : {4, 8, 16}) {
        const LatticePoint shift{int(std::lround(k * R / g->spacing())), 0, 0};
        const double x = std::abs(ref[0] + shift[0] * g->spacing());
        const double ct = std::abs(cross_term(V, w, shift));
        CHECK(ct <= cross_term_bound(V, w, shift, x - R) * (1 + 1e-8));
        if (prev > 0.0) CHECK(ct * x * x <= prev * prev_x * prev_x * (1 + 1e-2));
        prev = ct;
        prev_x = x;
    }
}

TEST_CASE("cross term with converging centres and a weakly vanishing partner") {
    // x_n = (1 + 1/n) e1 tends to a finite point while w_n oscillates faster
    // and faster. The singular weight only allows a slow (about 1/k) decay.
    auto g = CartesianGrid::make(3, 64, 8.0, 0.1);
    const auto V = gaussian_bubble(g, 1.0, 1.0, ref_point(*g));
    std::vector<double> values;
    for (int n : {2, 4, 8}) {
        const double k = n;
        const auto w = Field::sample_cartesian(g, [k](std::span<const double> x) {
            return std::polar(std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 8.0), k * x[0]);
        });
        const std::vector<double> shift{1.0 + 1.0 / n, 0.0, 0.0};
        // Modulus of the complex integral: real parts against w and i w.
        values.push_back(
            std::hypot(cross_term_continuous(V, w, shift), cross_term_continuous(V, w.scaled(cplx(0, 1)), shift)));
    }
    CHECK(values[1] < values[0]);
    CHECK(values[2] < values[1]);
    CHECK(values[2] < 0.3 * values[0]);
}

TEST_CASE("profile mass lower bound on the constant ground-state sequence") {
    const auto& gs = test::ground_state(3, 0.1, 8192);
    auto g = CartesianGrid::make(3, 32, 8.0, 0.1);
    const auto q = radial_to_cartesian(taper_radial(gs.profile, 6.0, 8.0), g);
    FieldSequence seq;
    seq.entries.assign(4, q);
    const auto res = lemma22_harness(seq, gs, 2);
    CHECK(res.pass);
    CHECK_FALSE(res.truncated);
    CHECK(res.gn_sum <= res.gn_cap * (1 + 1e-3));
    CHECK(res.profile_norm == doctest::Approx(std::sqrt(mass(q))).epsilon(1e-2));
}

TEST_CASE("profile mass lower bound is vacuous on a vanishing sequence") {
    const auto& gs = test::ground_state(3, 0.1, 8192);
    auto g = small_grid();
    FieldSequence seq;
    for (double width : {1.0, 1.5, 2.0, 2.5}) {
        auto f = gaussian_bubble(g, 1.0, width, ref_point(*g));
        seq.entries.push_back(f.scaled(1.0 / std::sqrt(mass(f))));
    }
    const auto res = lemma22_harness(seq, gs, 2);
    CHECK(res.bound < 0.2 * res.q_norm);
    CHECK(res.pass);
}
