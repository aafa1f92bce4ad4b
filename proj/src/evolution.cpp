#include "hnls/evolution.hpp"

#include "hnls/banded.hpp"
#include "hnls/checkpoint.hpp"
#include "hnls/errors.hpp"
#include "hnls/functionals.hpp"

#include <algorithm>
#include <iterator>
#include <utility>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace hnls {

namespace {

class Propagator {
public:
    explicit Propagator(const RadialGrid& grid) : grid_(grid), n_(grid.size()) {
        const double ds = grid.log_step();
        a0_ = 30.0 / (12.0 * ds * ds) + grid.kappa() * grid.kappa();
        a1_ = -16.0 / (12.0 * ds * ds);
        a2_ = 1.0 / (12.0 * ds * ds);
        const auto r = grid.radii();
        w_.resize(n_);
        inv_lift_sq_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            w_[i] = r[i] * r[i];
            inv_lift_sq_[i] = 1.0 / (grid.lift()[i] * grid.lift()[i]);
        }
        half_power_ = 2.0 / grid.dimension();
    }

    // g <- g exp(i tau |u|^{4/d}), |u|^2 = |g|^2 / r^{d-2}.
    void nonlinear_phase(std::vector<cplx>& g, double tau) const {
        const auto n = std::ptrdiff_t(n_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
            const auto i = std::size_t(ii);
            const double u2 = std::norm(g[i]) * inv_lift_sq_[i];
            if (u2 == 0.0) continue;
            const double phase = tau * kernels::nonneg_pow(u2, half_power_);
            g[i] *= cplx(std::cos(phase), std::sin(phase));
        }
    }

    // (W + i dt/2 A) g+ = (W - i dt/2 A) g.
    void linear(std::vector<cplx>& g, double dt) {
        auto it = std::find_if(cache_.begin(), cache_.end(), [&](const auto& e) { return e.first == dt; });
        if (it == cache_.end()) {
            const cplx h(0.0, 0.5 * dt);
            std::vector<cplx> dg(n_), o1(n_, h * a1_), o2(n_, h * a2_);
            for (std::size_t i = 0; i < n_; ++i) dg[i] = w_[i] + h * a0_;
            if (cache_.size() >= 3) cache_.erase(cache_.begin());
            cache_.emplace_back(dt, Pentadiagonal<cplx>(std::move(dg), std::move(o1), std::move(o2)));
            it = std::prev(cache_.end());
        }
        const auto& factor = it->second;
        const cplx h(0.0, -0.5 * dt);
        std::vector<cplx> rhs(n_);
        auto at = [&](std::ptrdiff_t j) { return (j < 0 || j >= std::ptrdiff_t(n_)) ? cplx(0.0) : g[std::size_t(j)]; };
        for (std::size_t i = 0; i < n_; ++i) {
            const auto ii = std::ptrdiff_t(i);
            const cplx Ag = a0_ * g[i] + a1_ * (at(ii - 1) + at(ii + 1)) + a2_ * (at(ii - 2) + at(ii + 2));
            rhs[i] = w_[i] * g[i] + h * Ag;
        }
        factor.solve(rhs);
        g = std::move(rhs);
    }

    void strang(std::vector<cplx>& g, double dt, bool nonlinear) {
        if (nonlinear) nonlinear_phase(g, 0.5 * dt);
        linear(g, dt);
        if (nonlinear) nonlinear_phase(g, 0.5 * dt);
    }

    // Yoshida triple jump of Strang steps; the inner half phases merge.
    void triple_jump(std::vector<cplx>& g, double dt, bool nonlinear) {
        const double cbrt2 = std::cbrt(2.0);
        const double w1 = 1.0 / (2.0 - cbrt2), w0 = -cbrt2 / (2.0 - cbrt2);
        if (nonlinear) nonlinear_phase(g, 0.5 * w1 * dt);
        linear(g, w1 * dt);
        if (nonlinear) nonlinear_phase(g, 0.5 * (w1 + w0) * dt);
        linear(g, w0 * dt);
        if (nonlinear) nonlinear_phase(g, 0.5 * (w0 + w1) * dt);
        linear(g, w1 * dt);
        if (nonlinear) nonlinear_phase(g, 0.5 * w1 * dt);
    }

    void advance(std::vector<cplx>& g, double dt, bool nonlinear, Splitting scheme) {
        if (scheme == Splitting::triple_jump) triple_jump(g, dt, nonlinear);
        else strang(g, dt, nonlinear);
    }

private:
    const RadialGrid& grid_;
    std::size_t n_;
    double a0_ = 0.0, a1_ = 0.0, a2_ = 0.0, half_power_ = 0.0;
    std::vector<double> w_, inv_lift_sq_;
    std::vector<std::pair<double, Pentadiagonal<cplx>>> cache_;
};

bool all_finite(const std::vector<cplx>& g) {
    return std::all_of(g.begin(), g.end(), [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

// max |u| on r >= (1 - fraction) r_max relative to max |u|.
double edge_ratio(const RadialGrid& grid, const std::vector<cplx>& g, double fraction) {
    const auto r = grid.radii();
    const auto lift = grid.lift();
    const double r_edge = (1.0 - fraction) * grid.r_max();
    double peak = 0.0, edge = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double u = std::abs(g[i]) / lift[i];
        peak = std::max(peak, u);
        if (r[i] >= r_edge) edge = std::max(edge, u);
    }
    return peak > 0.0 ? edge / peak : 0.0;
}

TraceRow make_row(double t, const Field& f, double dt) {
    const auto inv = invariant_report(f);
    return {t, inv.mass, inv.energy, inv.hardy, inv.gradient_term, inv.lp_critical, dt};
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

} // namespace

std::string to_string(Termination t) {
    switch (t) {
    case Termination::t_end_reached: return "t_end_reached";
    case Termination::blowup_resolved_limit: return "blowup_resolved_limit";
    case Termination::instability_detected: return "instability_detected";
    }
    return "unknown";
}

EvolutionState step(const EvolutionState& state, double dt, bool nonlinear, Splitting scheme) {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::Parameter, "time step must be positive");
    auto grid = state.field.radial_grid_ptr();
    Propagator prop(*grid);
    auto g = state.field.reduced();
    prop.advance(g, dt, nonlinear, scheme);
    if (!all_finite(g)) fail(ErrorKind::NonConvergence, "step produced a non-finite field");
    return {state.t + dt, Field::from_reduced(grid, g), dt, state.step_count + 1};
}

double adaptive_dt(const EvolutionState& state, double delta) {
    require(delta > 0.0 && delta < 1.0, ErrorKind::Parameter, "delta must lie in (0, 1)");
    return delta / std::max(1.0, hardy_functional(state.field));
}

EvolutionTrace evolve(const Field& u0, const EvolveConfig& cfg) {
    require(u0.is_radial(), ErrorKind::UnsupportedOperation, "evolution needs a radial field");
    require(cfg.fixed_dt > 0.0 || (cfg.delta > 0.0 && cfg.delta < 1.0), ErrorKind::Parameter,
            "delta must lie in (0, 1)");
    require(cfg.t_end > 0.0 && cfg.dt_min > 0.0, ErrorKind::Parameter, "t_end and dt_min must be positive");
    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

    auto grid = u0.radial_grid_ptr();
    Propagator prop(*grid);
    auto g = u0.reduced();
    EvolutionTrace trace;

    auto save = [&](double t, const Field& f, double hardy) {
        Snapshot snap{t, hardy, f, {}};
        if (!cfg.checkpoint_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%05zu.bin", trace.checkpoints.size());
            snap.file = name;
            write_checkpoint(cfg.checkpoint_dir / name, f,
                             {{"t", t}, {"hardy", hardy}, {"index", trace.checkpoints.size()}});
        }
        trace.checkpoints.push_back(std::move(snap));
    };

    double t = 0.0;
    TraceRow row = make_row(0.0, u0, 0.0);
    trace.rows.push_back(row);
    save(0.0, u0, row.hardy);
    double hardy = row.hardy;
    double last_record = 0.0, last_ckpt_t = 0.0, last_ckpt_h = hardy;
    bool last_saved = true, last_recorded = true;
    std::optional<Field> current;
    std::size_t steps = 0;

    for (;;) {
        double dt = cfg.fixed_dt > 0.0 ? cfg.fixed_dt : cfg.delta / std::max(1.0, hardy);
        if (cfg.fixed_dt <= 0.0 && dt < cfg.dt_min) {
            trace.termination = Termination::blowup_resolved_limit;
            trace.termination_detail = "adaptive dt " + sci(dt) + " fell below dt_min at t=" + sci(t);
            break;
        }
        if (t + dt >= cfg.t_end * (1.0 - 1e-14)) dt = cfg.t_end - t;
        if (!(dt > 0.0)) {
            trace.termination = Termination::t_end_reached;
            break;
        }
        if (++steps > cfg.max_steps) {
            trace.termination = Termination::instability_detected;
            trace.termination_detail = "step budget exhausted at t=" + sci(t);
            break;
        }
        try {
            prop.advance(g, dt, cfg.nonlinear, cfg.splitting);
        } catch (const Error& e) {
            trace.termination = Termination::instability_detected;
            trace.termination_detail = std::string("linear solve failed: ") + e.what();
            break;
        }
        if (!all_finite(g)) {
            trace.termination = Termination::instability_detected;
            trace.termination_detail = "non-finite field at t=" + sci(t + dt);
            break;
        }
        t = (t + dt >= cfg.t_end * (1.0 - 1e-14)) ? cfg.t_end : t + dt;
        current.emplace(Field::from_reduced(grid, g));
        row = make_row(t, *current, dt);
        hardy = row.hardy;
        last_recorded = last_saved = false;
        if (cfg.record_interval <= 0.0 || t - last_record >= cfg.record_interval) {
            trace.rows.push_back(row);
            last_record = t;
            last_recorded = true;
        }
        const bool by_time = cfg.checkpoint_interval > 0.0 && t - last_ckpt_t >= cfg.checkpoint_interval;
        const bool by_growth = cfg.checkpoint_growth > 1.0 && hardy >= cfg.checkpoint_growth * last_ckpt_h;
        if (by_time || by_growth) {
            save(t, *current, hardy);
            last_ckpt_t = t;
            last_ckpt_h = hardy;
            last_saved = true;
        }
        if (cfg.edge_tolerance > 0.0) {
            const double ratio = edge_ratio(*grid, g, cfg.edge_fraction);
            if (ratio >= cfg.edge_tolerance) {
                trace.termination = Termination::instability_detected;
                trace.termination_detail = "outer-edge monitor: |u| reached " + sci(ratio) +
                                           " of max |u| near r_max at t=" + sci(t) + " (under-resolved)";
                break;
            }
        }
        if (t >= cfg.t_end) {
            trace.termination = Termination::t_end_reached;
            break;
        }
    }
    if (current) {
        if (!last_recorded) trace.rows.push_back(row);
        if (!last_saved) save(t, *current, hardy);
    }

    try {
        trace.blowup = estimate_t_star(trace, cfg.blowup_growth, cfg.fit_tolerance);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotABlowup && e.kind() != ErrorKind::InconsistentEstimate) throw;
        if (trace.termination == Termination::blowup_resolved_limit)
            trace.termination_detail += std::string("; no blow-up estimate: ") + e.what();
    }
    return trace;
}

BlowupEstimate estimate_t_star(std::span<const TraceRow> rows, double growth, double fit_tolerance) {
    require(growth > 1.0, ErrorKind::Parameter, "window growth threshold must exceed 1");
    if (rows.size() < 4) fail(ErrorKind::NotABlowup, "trace too short for a blow-up fit");
    const double h0 = rows.front().hardy;
    if (!(h0 > 0.0)) fail(ErrorKind::NotABlowup, "initial Hardy functional is not positive");
    const double threshold = growth * h0;
    // Trailing window: every row from `lo` on has hardy >= threshold.
    std::size_t lo = rows.size();
    while (lo > 0 && rows[lo - 1].hardy >= threshold) --lo;
    const std::size_t m = rows.size() - lo;
    if (m < 3)
        fail(ErrorKind::NotABlowup, "Hardy functional grew by " + sci(rows.back().hardy / h0) + ", below the " +
                                        sci(growth) + " window threshold");

    // Weighted least squares on relative residuals (weights 1/y^2), so every
    // decade of growth in the window counts equally.
    double sw = 0.0, st = 0.0, sy = 0.0;
    for (std::size_t i = lo; i < rows.size(); ++i) {
        const double y = 1.0 / rows[i].gradient_term;
        const double w = 1.0 / (y * y);
        sw += w;
        st += w * rows[i].t;
        sy += w * y;
    }
    const double tm = st / sw, ym = sy / sw;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = lo; i < rows.size(); ++i) {
        const double y = 1.0 / rows[i].gradient_term;
        const double w = 1.0 / (y * y);
        const double dt = rows[i].t - tm;
        stt += w * dt * dt;
        sty += w * dt * (y - ym);
    }
    if (!(stt > 0.0)) fail(ErrorKind::NotABlowup, "fit window has zero time extent");
    const double slope = sty / stt;
    if (!(slope < 0.0)) fail(ErrorKind::NotABlowup, "1/||grad u||^2 is not decreasing over the window");

    BlowupEstimate est;
    est.t_star = tm - ym / slope;
    est.t_a = rows[lo].t;
    est.t_b = rows.back().t;
    est.window_rows = m;
    if (!(est.t_star > est.t_b))
        fail(ErrorKind::InconsistentEstimate, "estimated t_star " + sci(est.t_star) + " does not exceed the window end " +
                                                  sci(est.t_b));
    double ss_res = 0.0;
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < rows.size(); ++i) {
        const double y = 1.0 / rows[i].gradient_term;
        const double fit = ym + slope * (rows[i].t - tm);
        ss_res += (y - fit) * (y - fit) / (y * y);
        inf = std::min(inf, std::sqrt(rows[i].gradient_term) * std::sqrt(est.t_star - rows[i].t));
    }
    const double ss_y = double(m);
    est.fit_residual = std::sqrt(ss_res / ss_y);
    est.model_mismatch = est.fit_residual > fit_tolerance;
    est.rate_infimum = inf;
    return est;
}

BlowupEstimate estimate_t_star(const EvolutionTrace& trace, double growth, double fit_tolerance) {
    return estimate_t_star(std::span<const TraceRow>(trace.rows), growth, fit_tolerance);
}

} // namespace hnls
