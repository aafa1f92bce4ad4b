#include "hnls/errors.hpp"
#include "hnls/ground_state.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace hnls {

namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 2>; // (Q, dQ/ds)

enum class Shot { Over, Under, Reached };

struct Shooter {
    int d;
    double c, sigma, kappa, p, beta, s0, s_end, rel_tol;

    // Local expansion at r -> 0 of the admissible branch Q ~ A r^sigma.
    State series(double A, double r) const {
        const double c2 = 1.0 / (4.0 * (1.0 + kappa));
        const double cb = std::pow(A, p - 1.0) / (beta * (beta + 2.0 * kappa));
        const double rs = std::pow(r, sigma);
        const double q = A * rs * (1.0 + c2 * r * r - cb * std::pow(r, beta));
        const double qs = A * rs * (sigma + (sigma + 2.0) * c2 * r * r - (sigma + beta) * cb * std::pow(r, beta));
        return {q, qs};
    }

    void rhs(const State& x, State& dx, double s) const {
        const double e2s = std::exp(2.0 * s);
        const double q = x[0];
        dx[0] = x[1];
        dx[1] = -(d - 2.0) * x[1] - c * q + e2s * (q - std::pow(std::abs(q), p - 1.0) * q);
    }

    // Integrates until the trajectory leaves the positive decreasing branch.
    // `visit(t_old, t_new, stepper)` is called after every accepted step.
    template <class Visit>
    Shot shoot(double A, double& s_stop, Visit&& visit) const {
        auto stepper = ode::make_dense_output(1e-300, rel_tol, ode::runge_kutta_dopri5<State>());
        stepper.initialize(series(A, std::exp(s0)), s0, 1e-3);
        auto sys = [this](const State& x, State& dx, double s) { rhs(x, dx, s); };
        s_stop = s0;
        while (stepper.current_time() < s_end) {
            const auto [t0, t1] = stepper.do_step(sys);
            const State& x = stepper.current_state();
            if (!(x[0] > 0.0)) return Shot::Over;
            if (x[1] > 0.0) return Shot::Under;
            visit(t0, t1, stepper);
            s_stop = t1;
        }
        return Shot::Reached;
    }

    Shot classify(double A) const {
        double s_stop = 0.0;
        return shoot(A, s_stop, [](double, double, const auto&) {});
    }
};

double lagrange4(const std::vector<double>& xs0, double h, const std::vector<double>& v, double x) {
    const double t = (x - xs0.front()) / h;
    const auto n = static_cast<long>(v.size());
    long j = static_cast<long>(std::floor(t));
    const double f = t - double(j);
    if (f == 0.0 && j >= 0 && j < n) return v[static_cast<std::size_t>(j)];
    auto at = [&](long k) { return (k < 0 || k >= n) ? 0.0 : v[static_cast<std::size_t>(k)]; };
    const double a = at(j - 1), b = at(j), cc = at(j + 1), e = at(j + 2);
    return -f * (f - 1.0) * (f - 2.0) / 6.0 * a + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * b
           - (f + 1.0) * f * (f - 2.0) / 2.0 * cc + (f + 1.0) * f * (f - 1.0) / 6.0 * e;
}

} // namespace

double RadialProfile::value(double radius) const {
    require(radius > 0.0, ErrorKind::Parameter, "profile radius must be positive");
    if (radius >= r_valid) return 0.0;
    if (radius < r0) {
        return amplitude * std::pow(radius, sigma);
    }
    const double h = dense_s.size() > 1 ? dense_s[1] - dense_s[0] : 1.0;
    return lagrange4(dense_s, h, dense_q, std::log(radius));
}

RadialProfile shooting_oracle(int d, double c, double r_max, std::span<const double> sample_radii,
                              const ShootingOptions& opts) {
    require(d >= 3, ErrorKind::Parameter, "shooting oracle needs d >= 3");
    require(c >= 0.0 && c < hardy_constant(d), ErrorKind::Parameter, "coupling outside [0, c*)");
    require(r_max > opts.r0 && opts.r0 > 0.0, ErrorKind::Parameter, "need 0 < r0 < r_max");

    Shooter sh{};
    sh.d = d;
    sh.c = c;
    sh.kappa = std::sqrt(hardy_constant(d) - c);
    sh.sigma = origin_exponent(d, c);
    sh.p = 1.0 + 4.0 / d;
    sh.beta = 2.0 + 4.0 * sh.sigma / d;
    sh.s0 = std::log(opts.r0);
    sh.s_end = std::log(r_max);
    sh.rel_tol = opts.rel_tol;

    double lo = 1.0, hi = 1.0;
    Shot first = sh.classify(1.0);
    int guard = 0;
    if (first == Shot::Over) {
        while (sh.classify(lo) != Shot::Under) {
            lo *= 0.5;
            if (++guard > 200) fail(ErrorKind::OracleFailure, "no undershooting amplitude found");
        }
        hi = 2.0 * lo;
    } else {
        while (sh.classify(hi) != Shot::Over) {
            hi *= 2.0;
            if (++guard > 200) fail(ErrorKind::OracleFailure, "no overshooting amplitude found");
        }
        lo = 0.5 * hi;
    }
    for (int k = 0; k < opts.max_bisections && hi - lo > 4e-16 * hi; ++k) {
        const double mid = 0.5 * (lo + hi);
        const Shot s = sh.classify(mid);
        if (s == Shot::Over) hi = mid;
        else if (s == Shot::Under) lo = mid;
        else { lo = hi = mid; break; }
    }

    RadialProfile prof;
    prof.d = d;
    prof.c = c;
    prof.amplitude = 0.5 * (lo + hi);
    prof.sigma = sh.sigma;
    prof.r0 = opts.r0;

    constexpr std::size_t kDense = 1 << 16;
    const double hs = (sh.s_end - sh.s0) / double(kDense - 1);
    prof.dense_s.resize(kDense);
    prof.dense_q.assign(kDense, 0.0);
    for (std::size_t i = 0; i < kDense; ++i) prof.dense_s[i] = sh.s0 + hs * double(i);
    prof.dense_q[0] = sh.series(prof.amplitude, opts.r0)[0];
    std::size_t next = 1;
    double s_stop = sh.s0;
    sh.shoot(prof.amplitude, s_stop, [&](double, double t1, const auto& stepper) {
        State x{};
        while (next < kDense && prof.dense_s[next] <= t1) {
            stepper.calc_state(prof.dense_s[next], x);
            prof.dense_q[next++] = x[0];
        }
    });
    // Samples past the last accepted step on the decreasing branch are zero.
    while (next < kDense) prof.dense_q[next++] = 0.0;
    prof.r_valid = std::exp(s_stop);

    // Trapezoid in s plus the exact integral of the leading term below r0.
    double acc = 0.0;
    for (std::size_t i = 0; i < kDense; ++i) {
        const double w = (i == 0 || i + 1 == kDense) ? 0.5 : 1.0;
        acc += w * prof.dense_q[i] * prof.dense_q[i] * std::exp(d * prof.dense_s[i]);
    }
    const double head = prof.amplitude * prof.amplitude * std::pow(opts.r0, 2.0 * sh.sigma + d) / (2.0 * sh.sigma + d);
    prof.mass = sphere_measure(d) * (acc * hs + head);

    prof.r.assign(sample_radii.begin(), sample_radii.end());
    prof.q.reserve(prof.r.size());
    for (double r : prof.r) prof.q.push_back(prof.value(r));
    return prof;
}

double oracle_distance(const GroundState& gs, const RadialProfile& oracle) {
    const auto& g = gs.profile.radial_grid();
    require(oracle.d == gs.d && oracle.c == gs.c, ErrorKind::Parameter, "oracle solved a different equation");
    const auto r = g.radii();
    const auto w = g.weights();
    const double num = kernels::omp::exact_sum(g.size(), [&](std::size_t i) {
        const double e = gs.profile[i].real() - oracle.value(r[i]);
        return w[i] * e * e;
    });
    return std::sqrt(num / gs.mass_sq);
}

} // namespace hnls
