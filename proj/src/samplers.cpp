#include "hnls/samplers.hpp"

#include <cmath>

namespace hnls {

double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

namespace {
int component_count(Rng& rng) { return 1 + int(rng() % 4); }
} // namespace

Field random_radial_field(RadialGridPtr grid, Rng& rng) {
    struct Shell {
        cplx a;
        double center, width, chirp;
    };
    std::vector<Shell> shells(std::size_t(component_count(rng)));
    for (auto& s : shells) {
        s.a = std::polar(uniform(rng, 0.2, 2.0), uniform(rng, 0.0, 2.0 * M_PI));
        s.center = uniform(rng, 0.0, 4.0);
        s.width = uniform(rng, 0.3, 2.0);
        s.chirp = uniform(rng, -0.5, 0.5);
    }
    return Field::sample_radial(grid, [&](double r) {
        cplx v = 0.0;
        for (const auto& s : shells) {
            const double x = (r - s.center) / s.width;
            v += s.a * std::exp(-0.5 * x * x) * std::polar(1.0, s.chirp * r * r);
        }
        return v;
    });
}

Field random_smooth_cartesian(CartesianGridPtr grid, Rng& rng) {
    const int d = grid->dimension();
    const double L = grid->half_width();
    struct Bump {
        cplx a;
        std::vector<double> center, k;
        double width;
    };
    std::vector<Bump> bumps(std::size_t(component_count(rng)));
    for (auto& b : bumps) {
        b.a = std::polar(uniform(rng, 0.2, 2.0), uniform(rng, 0.0, 2.0 * M_PI));
        for (int a = 0; a < d; ++a) {
            b.center.push_back(uniform(rng, -0.5 * L, 0.5 * L));
            b.k.push_back(uniform(rng, -2.0, 2.0));
        }
        b.width = uniform(rng, 0.1 * L, 0.25 * L);
    }
    const double box = 2.0 * L;
    return Field::sample_cartesian(grid, [&](std::span<const double> x) {
        cplx v = 0.0;
        for (const auto& b : bumps) {
            double r2 = 0.0, phase = 0.0;
            for (std::size_t a = 0; a < x.size(); ++a) {
                double dx = x[a] - b.center[a];
                dx -= box * std::round(dx / box);
                r2 += dx * dx;
                phase += b.k[a] * dx;
            }
            v += b.a * std::exp(-0.5 * r2 / (b.width * b.width)) * std::polar(1.0, phase);
        }
        return v;
    });
}

Field random_rough_cartesian(CartesianGridPtr grid, Rng& rng) {
    std::vector<cplx> v(grid->size());
    for (auto& x : v) {
        const double re = uniform(rng, -1.0, 1.0);
        x = cplx(re, uniform(rng, -1.0, 1.0));
    }
    return Field(grid, std::move(v));
}

} // namespace hnls
