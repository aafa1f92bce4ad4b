// Times the serial reference kernels against the OpenMP ones and checks that
// both return identical bits.

#include "hnls/kernels.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <random>

namespace k = hnls::kernels;

namespace {

template <class F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

bool report(const char* name, double ts, double tp, bool same) {
    std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %5.2f   %s\n", name, 1e3 * ts, 1e3 * tp, ts / tp,
                same ? "bitwise equal" : "MISMATCH");
    return same;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    int points = 64, reps = 3;
    double radius = 2.5;
    app.add_option("--points", points, "lattice points per axis (3-D)");
    app.add_option("--reps", reps, "repetitions, best time is reported");
    app.add_option("--radius", radius, "window radius in cells");
    CLI11_PARSE(app, argc, argv);

    const k::Lattice lat{3, points};
    const std::size_t n = lat.size();
    std::mt19937_64 rng(1);
    std::vector<k::cplx> f(n);
    std::vector<double> density(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = {double(rng() >> 11) * 0x1p-53 - 0.5, double(rng() >> 11) * 0x1p-53 - 0.5};
        density[i] = std::norm(f[i]);
    }
    const auto offsets = k::ball_offsets(3, radius);
    std::printf("lattice %d^3 (%zu nodes), %zu window offsets\n", points, n, offsets.size());

    bool ok = true;
    auto term = [&](std::size_t i) { return density[i] * (1.0 + 1e-3 * double(i % 7)); };
    double a = 0, b = 0;
    ok &= report("exact_sum", best_of(reps, [&] { a = k::serial::exact_sum(n, term); }),
                 best_of(reps, [&] { b = k::omp::exact_sum(n, term); }), a == b);
    ok &= report("lattice_difference_energy", best_of(reps, [&] { a = k::serial::lattice_difference_energy(f, lat); }),
                 best_of(reps, [&] { b = k::omp::lattice_difference_energy(f, lat); }), a == b);
    std::vector<double> ws, wp;
    ok &= report("window_sums", best_of(reps, [&] { ws = k::serial::window_sums(density, lat, offsets); }),
                 best_of(reps, [&] { wp = k::omp::window_sums(density, lat, offsets); }), ws == wp);
    return ok ? 0 : 1;
}
