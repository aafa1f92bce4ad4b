#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"
#include "hnls/grids.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace hnls;

namespace {

const double kPi32 = std::pow(M_PI, 1.5);

// e^{-r^2/2} in d = 3: mass pi^{3/2}, ||grad||^2 = (3/2) pi^{3/2},
// integral of |f|^2/|x|^2 = 2 pi^{3/2}.
Field radial_gaussian(std::size_t n) {
    return Field::sample_radial(RadialGrid::make(3, 0.1, n), [](double r) { return cplx(std::exp(-0.5 * r * r)); });
}

Field cartesian_gaussian(int m, double L = 8.0) {
    return Field::sample_cartesian(CartesianGrid::make(3, m, L, 0.1), [](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return cplx(std::exp(-0.5 * r2));
    });
}

double order(double e_coarse, double e_fine) { return std::log2(std::abs(e_coarse) / std::abs(e_fine)); }

} // namespace

TEST_CASE("hardy constant and sphere measure") {
    CHECK(hardy_constant(3) == 0.25);
    CHECK(hardy_constant(5) == 2.25);
    CHECK(sphere_measure(3) == doctest::Approx(4.0 * M_PI));
    CHECK(sphere_measure(4) == doctest::Approx(2.0 * M_PI * M_PI));
}

TEST_CASE("radial grid construction and validation") {
    auto g = RadialGrid::make(3, 0.1);
    CHECK(g->size() == 8192);
    CHECK(g->r_max() == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(g->kappa() == doctest::Approx(std::sqrt(0.15)));
    // Inner edge: the reduced tail r^kappa is negligible there.
    CHECK(std::pow(g->r_min(), g->kappa()) < 1e-6);
    CHECK_THROWS_AS(RadialGrid::make(3, 0.25), Error);
    CHECK_THROWS_AS(RadialGrid::make(3, 0.0), Error);
    CHECK_THROWS_AS(RadialGrid::make(2, 0.1), Error);
    auto h = RadialGrid::make_log(3, 0.1, 8192, g->s_min(), g->r_max());
    CHECK(h->same_as(*g));
}

TEST_CASE("radial quadrature of a Gaussian: closed forms and declared orders") {
    // Mass: spectral; gradient: 4th order (stencil); potential: spectral.
    const auto f = radial_gaussian(8192);
    CHECK(mass(f) == doctest::Approx(kPi32).epsilon(1e-13));
    CHECK(gradient_norm_sq(f) == doctest::Approx(1.5 * kPi32).epsilon(1e-8));
    CHECK(potential_integral(f) == doctest::Approx(2.0 * kPi32).epsilon(1e-13));
    const double e256 = gradient_norm_sq(radial_gaussian(256)) / (1.5 * kPi32) - 1.0;
    const double e512 = gradient_norm_sq(radial_gaussian(512)) / (1.5 * kPi32) - 1.0;
    const double e1024 = gradient_norm_sq(radial_gaussian(1024)) / (1.5 * kPi32) - 1.0;
    CHECK(order(e256, e512) >= 3.5);
    CHECK(order(e512, e1024) >= 3.5);
    const double m64 = mass(radial_gaussian(64)) / kPi32 - 1.0, m128 = mass(radial_gaussian(128)) / kPi32 - 1.0;
    CHECK(order(m64, m128) >= 3.5);
}

TEST_CASE("Cartesian quadrature of a Gaussian: declared orders") {
    // Gradient: 2nd order; potential: 1st order (the 1/|x|^2 singularity
    // sits between nodes); mass: spectral.
    const auto f16 = cartesian_gaussian(16), f32 = cartesian_gaussian(32), f64 = cartesian_gaussian(64);
    CHECK(mass(f32) == doctest::Approx(kPi32).epsilon(1e-12));
    auto ge = [](const Field& f) { return gradient_norm_sq(f) / (1.5 * kPi32) - 1.0; };
    auto pe = [](const Field& f) { return potential_integral(f) / (2.0 * kPi32) - 1.0; };
    CHECK(order(ge(f16), ge(f32)) >= 1.5);
    CHECK(order(ge(f32), ge(f64)) >= 1.5);
    CHECK(order(pe(f16), pe(f32)) >= 0.5);
    CHECK(order(pe(f32), pe(f64)) >= 0.5);
    CHECK(gradient_norm_sq_spectral(f32) == doctest::Approx(gradient_norm_sq(f32)).epsilon(1e-10));
}

TEST_CASE("Cartesian grid has no node at the origin") {
    auto g = CartesianGrid::make(3, 16, 4.0, 0.1);
    for (double v : g->inverse_radius_sq()) CHECK(std::isfinite(v));
    CHECK(g->coordinate(8) == doctest::Approx(0.5 * g->spacing()));
    const auto idx = g->index_of(std::vector<int>{1, 2, 3});
    CHECK(g->coords_of(idx) == std::vector<int>{1, 2, 3});
}

TEST_CASE("translation: lattice round trip and agreement with the Fourier shift") {
    auto g = CartesianGrid::make(3, 16, 8.0, 0.1);
    Rng rng(test::kSeed);
    const auto f = random_smooth_cartesian(g, rng);
    const std::vector<int> s{3, -5, 7}, back{-3, 5, -7};
    const auto t = translate(f, s);
    const auto r = translate(t, back);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(r[i] == f[i]);
    CHECK(mass(t) == doctest::Approx(mass(f)).epsilon(1e-14));
    const std::vector<double> sc{3.0 * g->spacing(), -5.0 * g->spacing(), 7.0 * g->spacing()};
    const auto tc = translate_continuous(f, sc);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(tc[i] - t[i]));
    CHECK(worst < 1e-12);
    CHECK_THROWS_AS(translate(radial_gaussian(256), s), Error);
}

TEST_CASE("radial rescale preserves mass and scales H quadratically") {
    const auto f = radial_gaussian(8192);
    for (double lambda : {0.5, 2.0, 3.7}) {
        const auto res = rescale(f, lambda);
        CHECK_FALSE(res.under_resolved);
        CHECK(mass(res.field) == doctest::Approx(mass(f)).epsilon(1e-9));
        CHECK(gradient_norm_sq(res.field) == doctest::Approx(lambda * lambda * gradient_norm_sq(f)).epsilon(1e-6));
    }
    // Pushing content off the grid is flagged.
    CHECK(rescale(f, 1e-3).under_resolved);
}

TEST_CASE("Cartesian rescale preserves mass for resolved dilations") {
    const auto f = cartesian_gaussian(32);
    const auto res = rescale(f, 1.3);
    CHECK(mass(res.field) == doctest::Approx(mass(f)).epsilon(1e-6));
    CHECK(rescale(f, 0.2).under_resolved);
}

TEST_CASE("radial to Cartesian export keeps the mass") {
    const auto f = radial_gaussian(8192);
    const auto c = radial_to_cartesian(f, CartesianGrid::make(3, 48, 8.0, 0.1));
    CHECK(mass(c) == doctest::Approx(mass(f)).epsilon(1e-6));
    CHECK(radial_value(f, 1.0).real() == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("field arithmetic checks its operands") {
    const auto a = radial_gaussian(256), b = radial_gaussian(512);
    CHECK_THROWS_AS(a + b, Error);
    const auto z = a - a;
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == cplx(0.0));
    CHECK_THROWS_AS(Field(a.grid(), std::vector<cplx>(3)), Error);
}

TEST_CASE("taper leaves the inside untouched and zeroes the outside") {
    const auto f = radial_gaussian(2048);
    const auto t = taper_radial(f, 2.0, 4.0);
    const auto r = f.radial_grid().radii();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 2.0) CHECK(t[i] == f[i]);
        if (r[i] >= 4.0) CHECK(t[i] == cplx(0.0));
    }
}
