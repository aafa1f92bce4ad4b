#include "hnls/concentration.hpp"
#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"
#include "hnls/profiles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

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

// Self-similar collapse u(t) = lambda^{3/2} Q(lambda x), lambda = (T - t)^{-1/2}.
EvolutionTrace collapsing_trace(const GroundState& gs, double T) {
    EvolutionTrace tr;
    for (int i = 0; i <= 12; ++i) {
        const double t = T * (1.0 - std::pow(0.5, i));
        auto f = rescale(gs.profile, 1.0 / std::sqrt(T - t)).field;
        tr.checkpoints.push_back({t, hardy_functional(f), f, {}});
    }
    BlowupEstimate est;
    est.t_star = T;
    est.t_a = tr.checkpoints[4].t;
    est.t_b = tr.checkpoints.back().t;
    tr.blowup = est;
    tr.termination = Termination::blowup_resolved_limit;
    return tr;
}

} // namespace

TEST_CASE("rho and the rescaled snapshot") {
    const auto& gs = test::ground_state(3, 0.1, 4096);
    CHECK(rho(gs, gs.profile) == doctest::Approx(1.0).epsilon(1e-14));
    for (double lambda : {0.5, 3.0, 40.0}) {
        const auto f = rescale(gs.profile, lambda).field.scaled(1.1);
        const auto v = rescaled_snapshot(gs, f);
        CHECK_FALSE(v.under_resolved);
        CHECK(rel(hardy_functional(v.field), gs.hardy) < 1e-12);
        CHECK(rel(mass(v.field), mass(f)) < 1e-12);
        CHECK(rel(rho(gs, f), 1.0 / (1.1 * lambda)) < 1e-3);
    }
    CHECK(kind_of([&] { rho(gs, Field::zeros(gs.profile.grid())); }) == ErrorKind::DegenerateInput);
}

TEST_CASE("windowed mass of the ground state") {
    const auto& gs = test::ground_state(3, 0.1, 4096);
    const std::vector<double> o(3, 0.0);
    const double m5 = windowed_mass(gs.profile, o, 5.0);
    CHECK(m5 > 0.0);
    CHECK(m5 < gs.mass_sq);
    double prev = 0.0;
    for (double r : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double m = windowed_mass(gs.profile, o, r);
        CHECK(m > prev);
        prev = m;
    }
    CHECK(windowed_mass(gs.profile, o, 1e3) == doctest::Approx(gs.mass_sq).epsilon(1e-14));
    CHECK(kind_of([&] { windowed_mass(gs.profile, std::vector<double>{1.0, 0.0, 0.0}, 1.0); }) ==
          ErrorKind::UnsupportedOperation);
    CHECK(kind_of([&] { windowed_mass(gs.profile, o, 0.0); }) == ErrorKind::Parameter);
}

TEST_CASE("Cartesian windows use the minimum image") {
    auto grid = CartesianGrid::make(3, 16, 4.0, 0.1);
    const std::vector<double> corner(3, grid->coordinate(15));
    const auto f = gaussian_bubble(grid, 1.0, 0.6, corner);
    const std::vector<double> wrapped(3, grid->coordinate(0));
    // The opposite corner is one cell away through the boundary.
    CHECK(windowed_mass(f, wrapped, 1.5) > 0.5 * mass(f));
    CHECK(windowed_mass(f, corner, 100.0) == doctest::Approx(mass(f)).epsilon(1e-14));
}

TEST_CASE("property: best_center finds translated bubbles") {
    auto grid = CartesianGrid::make(3, 24, 6.0, 0.1);
    Rng rng(test::kSeed);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<double> x0(3);
        for (auto& x : x0) x = uniform(rng, -6.0, 6.0);
        const auto f = gaussian_bubble(grid, uniform(rng, 0.5, 2.0), uniform(rng, 0.6, 1.5), x0);
        const auto bc = best_center(f, 1.0);
        for (int a = 0; a < 3; ++a) {
            double dx = bc.point[std::size_t(a)] - x0[std::size_t(a)];
            dx -= 12.0 * std::round(dx / 12.0);
            CHECK(std::abs(dx) <= grid->spacing());
        }
        CHECK(bc.windowed_mass == doctest::Approx(windowed_mass(f, bc.point, 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("best_center breaks ties towards the smallest index") {
    auto grid = CartesianGrid::make(3, 8, 2.0, 0.1);
    const auto flat = Field::sample_cartesian(grid, [](std::span<const double>) { return cplx(1.0); });
    CHECK(best_center(flat, 0.6).index == 0);
    CHECK(best_center(Field::zeros(grid), 0.6).index == 0);
}

TEST_CASE("concentration of a self-similar collapse") {
    const auto& gs = test::ground_state(3, 0.1, 4096);
    const auto tr = collapsing_trace(gs, 1.0);
    const auto curve = concentration_curve(tr, gs, {});
    REQUIRE(curve.rows.size() == tr.checkpoints.size());
    CHECK(curve.admissibility_increasing);
    CHECK(curve.t_star == 1.0);
    double prev = 0.0;
    for (const auto& r : curve.rows) {
        CHECK(r.windowed_mass <= gs.mass_sq * (1 + 1e-8));
        CHECK(r.fraction >= prev);
        CHECK(r.rho == doctest::Approx(std::sqrt(1.0 - r.t)).epsilon(1e-3));
        prev = r.fraction;
    }
    CHECK(curve.rows.back().fraction > 0.99);
    // A much narrower window misses part of the profile.
    WindowSpec tight;
    tight.beta = 0.49;
    tight.kappa = 0.01;
    CHECK(concentration_curve(tr, gs, tight).rows.back().fraction < curve.rows.back().fraction);
}

TEST_CASE("concentration preconditions") {
    const auto& gs = test::ground_state(3, 0.1, 4096);
    auto tr = collapsing_trace(gs, 1.0);
    WindowSpec bad;
    bad.beta = 0.5;
    CHECK(kind_of([&] { concentration_curve(tr, gs, bad); }) == ErrorKind::Parameter);
    WindowSpec early;
    early.t_star = 0.5;
    CHECK(kind_of([&] { concentration_curve(tr, gs, early); }) == ErrorKind::InconsistentEstimate);
    tr.blowup.reset();
    CHECK(kind_of([&] { concentration_curve(tr, gs, {}); }) == ErrorKind::Precondition);
}
