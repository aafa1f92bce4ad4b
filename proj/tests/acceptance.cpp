// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Usage: acceptance [work_dir]

#include "hnls/config.hpp"
#include "hnls/evolution.hpp"
#include "hnls/functionals.hpp"
#include "hnls/ground_state.hpp"
#include "hnls/manifest.hpp"
#include "hnls/profiles.hpp"
#include "hnls/runner.hpp"
#include "hnls/samplers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

using namespace hnls;
namespace fs = std::filesystem;

namespace {

fs::path g_work;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunResult pipeline(Experiment e, const std::string& dir, std::map<std::string, std::string> params = {}) {
    RunConfig cfg;
    cfg.experiment = e;
    cfg.output_dir = g_work / dir;
    for (const auto& [k, v] : params) cfg.set(k, v);
    return run(cfg);
}

const Stage* stage(const RunResult& r, const std::string& name) {
    for (const auto& s : r.stages)
        if (s.name == name) return &s;
    return nullptr;
}

const Check* check(const RunResult& r, const std::string& st, const std::string& name) {
    if (const auto* s = stage(r, st))
        for (const auto& c : s->checks)
            if (c.name == name) return &c;
    return nullptr;
}

void require_stage(Verdict& v, const RunResult& r, const std::string& name) {
    const auto* s = stage(r, name);
    v.require(s && s->passed(), "stage " + name);
}

double value(const RunResult& r, const std::string& st, const std::string& name) {
    const auto* c = check(r, st, name);
    return c ? c->value : std::nan("");
}

int g_failures = 0;

void criterion(int n, const std::string& title, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("error: ") + e.what();
    }
    if (!v.pass) ++g_failures;
    std::printf("%s criterion %d: %s [%s] (%.1f s)\n", v.pass ? "PASS" : "FAIL", n, title.c_str(), v.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every CSV under `a` must exist under `b` with identical bytes.
void compare_csvs(Verdict& v, const fs::path& a, const fs::path& b) {
    std::size_t count = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        const auto rel = fs::relative(e.path(), a);
        ++count;
        if (!fs::exists(b / rel) || git_blob_hash(slurp(e.path())) != git_blob_hash(slurp(b / rel)))
            v.require(false, rel.string() + " differs");
    }
    v.require(count > 0, a.filename().string() + ": " + std::to_string(count) + " CSVs identical");
}

} // namespace

int main(int argc, char** argv) {
    g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hnls_acceptance";
    fs::create_directories(g_work);
    const auto t_all = std::chrono::steady_clock::now();

    criterion(1, "ground-state validity", [] {
        Verdict v;
        for (double c : {0.05, 0.1, 0.2}) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto gs = solve_ground_state(3, c, RadialGrid::make(3, c, 8192, 50.0));
            const auto inv = invariant_report(gs.profile);
            const double res = gs.residual / h1_norm(gs.profile);
            const double p1 = std::abs(inv.hardy - 1.5 * inv.mass) / inv.hardy;
            const double p2 = std::abs(inv.lp_critical - 5.0 / 3.0 * inv.hardy) / inv.lp_critical;
            const double dist = oracle_distance(gs, shooting_oracle(3, c, 50.0));
            const double secs = seconds_since(t0);
            const std::string tag = "c=" + fmt("%g", c) + " ";
            v.require(res < 1e-8, tag + "residual " + fmt("%.2e", res));
            v.require(p1 < 1e-5 && p2 < 1e-5, tag + "pohozaev " + fmt("%.1e", std::max(p1, p2)));
            v.require(dist < 1e-3, tag + "oracle " + fmt("%.1e", dist));
            v.require(secs <= 60.0, tag + fmt("%.1f s", secs));
        }
        return v;
    });

    RunResult functionals;
    criterion(2, "sharp Gagliardo-Nirenberg inequality", [&] {
        Verdict v;
        functionals = pipeline(Experiment::verify_functionals, "functionals", {{"seed", "7"}});
        v.require(check(functionals, "gagliardo_nirenberg", "gn_ratio(Q) = 1")->passed,
                  "gn_ratio(Q) " + fmt("%.8f", value(functionals, "gagliardo_nirenberg", "gn_ratio(Q) = 1")));
        v.require(check(functionals, "gagliardo_nirenberg", "max gn_ratio over samples")->passed,
                  "max over 200 samples " + fmt("%.6f", value(functionals, "gagliardo_nirenberg", "max gn_ratio over samples")));
        return v;
    });

    criterion(3, "conservation on the soliton", [] {
        Verdict v;
        const auto gs = solve_ground_state(3, 0.1, RadialGrid::make(3, 0.1, 8192, 50.0));
        EvolveConfig cfg;
        cfg.t_end = 1.0;
        cfg.delta = 0.01;
        cfg.checkpoint_growth = 0.0;
        cfg.checkpoint_interval = 0.05;
        const auto tr = evolve(gs.profile, cfg);
        double mass_drift = 0.0, energy_drift = 0.0;
        for (const auto& r : tr.rows) {
            mass_drift = std::max(mass_drift, std::abs(r.mass - tr.rows.front().mass) / tr.rows.front().mass);
            energy_drift = std::max(energy_drift, std::abs(r.energy - tr.rows.front().energy));
        }
        // Q ~ r^sigma with sigma < 0 is unbounded at the origin, so the sup is
        // taken on the reduced field r^{(d-2)/2} |u|, which is bounded. The
        // plain nodewise value is printed for reference.
        const auto gq = gs.profile.reduced();
        double l2_dev = 0.0, sup_dev = 0.0, g_max = 0.0, node_dev = 0.0, q_max = 0.0;
        for (std::size_t i = 0; i < gq.size(); ++i) {
            g_max = std::max(g_max, std::abs(gq[i]));
            q_max = std::max(q_max, gs.profile[i].real());
        }
        for (const auto& s : tr.checkpoints) {
            l2_dev = std::max(l2_dev, std::sqrt(mass(s.field.modulus() - gs.profile) / gs.mass_sq));
            const auto gu = s.field.reduced();
            for (std::size_t i = 0; i < gu.size(); ++i) {
                sup_dev = std::max(sup_dev, std::abs(std::abs(gu[i]) - std::abs(gq[i])));
                node_dev = std::max(node_dev, std::abs(std::abs(s.field[i]) - gs.profile[i].real()));
            }
        }
        sup_dev /= g_max;
        v.require(tr.termination == Termination::t_end_reached, "reached t = 1");
        v.require(mass_drift < 1e-10, "mass drift " + fmt("%.1e", mass_drift));
        v.require(energy_drift < 1e-6, "energy drift " + fmt("%.1e", energy_drift));
        v.require(l2_dev < 1e-3, "L2 deviation " + fmt("%.1e", l2_dev));
        v.require(sup_dev < 1e-3, "sup deviation of r^{(d-2)/2}|u| " + fmt("%.1e", sup_dev));
        v.require(true, "nodewise sup / max Q " + fmt("%.1e", node_dev / q_max) + " (singular core, not asserted)");
        auto error = [&](double dt) {
            EvolutionState s{0.0, gs.profile, 0.0, 0};
            for (int i = 0; i < int(std::lround(1.0 / dt)); ++i) s = step(s, dt);
            return std::sqrt(mass(s.field - gs.profile.scaled(std::polar(1.0, s.t))) / gs.mass_sq);
        };
        const double ratio = error(2e-3) / error(1e-3);
        v.require(ratio >= 2.7, "dt-halving error ratio " + fmt("%.2f", ratio));
        return v;
    });

    RunResult blowup;
    criterion(4, "blow-up rate", [&] {
        Verdict v;
        blowup = pipeline(Experiment::pipeline_theorem11, "theorem11");
        require_stage(v, blowup, "ground_state");
        require_stage(v, blowup, "evolve");
        require_stage(v, blowup, "blowup");
        v.require(true, "growth " + fmt("%.0f", value(blowup, "blowup", "hardy growth >= 1e3")) + "x, fit residual " +
                            fmt("%.2e", value(blowup, "blowup", "fit residual")) + ", rate_infimum " +
                            fmt("%.3f", value(blowup, "blowup", "rate_infimum > 0")) + ", window shift " +
                            fmt("%.3f", value(blowup, "blowup", "rate_infimum window stability")));
        return v;
    });

    criterion(5, "mass concentration", [&] {
        Verdict v;
        require_stage(v, blowup, "concentration");
        v.require(true, "final fraction " + fmt("%.4f", value(blowup, "concentration", "fraction at final checkpoint")) +
                            ", last-decade drawdown " +
                            fmt("%.4f", value(blowup, "concentration", "fraction nondecreasing over last decade")));
        return v;
    });

    RunResult profiles_clean, profiles_noisy;
    criterion(6, "profile decomposition identities", [&] {
        Verdict v;
        profiles_clean = pipeline(Experiment::profiles, "profiles_clean");
        profiles_noisy = pipeline(Experiment::profiles, "profiles_noisy", {{"noise", "0.05"}, {"seed", "11"}});
        require_stage(v, profiles_clean, "profiles");
        require_stage(v, profiles_noisy, "profiles");
        v.require(true, "pythagorean defect " +
                            fmt("%.1e", value(profiles_clean, "profiles", "pythagorean defect at n = N (relative)")) +
                            ", hardy defect " +
                            fmt("%.1e", value(profiles_clean, "profiles", "hardy defect at n = N (relative)")) +
                            ", noisy residual/floor " +
                            fmt("%.2f", value(profiles_noisy, "profiles", "residual L^p within noise floor") /
                                            check(profiles_noisy, "profiles", "residual L^p within noise floor")->limit));
        return v;
    });

    criterion(7, "cross-term vanishing", [] {
        Verdict v;
        auto g = CartesianGrid::make(3, 80, 20.0, 0.1);
        const double R = 1.0;
        const double x0 = g->coordinate(40);
        const auto V = Field::sample_cartesian(g, [&](std::span<const double> x) {
            double r2 = 0.0;
            for (double xi : x) r2 += (xi - x0) * (xi - x0);
            const double r = std::sqrt(r2) / R;
            return cplx(r < 1.0 ? std::pow(std::cos(std::numbers::pi * r / 2), 2) : 0.0);
        });
        // Slowly varying partner with a fixed random phase.
        Rng rng(20240611);
        const cplx phase = std::polar(1.0, uniform(rng, 0.0, 2 * std::numbers::pi));
        const auto w = Field::sample_cartesian(g, [&](std::span<const double> x) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            return phase / (1.0 + r2 / 400.0);
        });
        double prev = std::numeric_limits<double>::infinity();
        for (int k : {4, 8, 16}) {
            const LatticePoint shift{int(std::lround(k * R / g->spacing())), 0, 0};
            const double xn = std::hypot(x0 + shift[0] * g->spacing(), x0, x0);
            const double ct = std::abs(cross_term(V, w, shift));
            const double bound = cross_term_bound(V, w, shift, R);
            v.require(ct <= bound * (1 + 1e-8), "|x_n|=" + fmt("%.2f", xn) + " cross " + fmt("%.3e", ct) + " <= " +
                                                    fmt("%.3e", bound));
            v.require(ct < prev, "decreasing");
            prev = ct;
        }
        return v;
    });

    criterion(8, "profile mass lower bound pipeline", [&] {
        Verdict v;
        const auto r = pipeline(Experiment::pipeline_lemma22, "lemma22", {{"source_dir", (g_work / "theorem11").string()}});
        require_stage(v, r, "source");
        require_stage(v, r, "constant_q");
        require_stage(v, r, "snapshots");
        v.require(true, "constant Q ||V||/bound " + fmt("%.4f", value(r, "constant_q", "||V|| >= (1 - tol) bound")) +
                            ", snapshots ||V||/||Q|| " + fmt("%.4f", value(r, "snapshots", "||V|| >= 0.95 ||Q||")));
        return v;
    });

    criterion(9, "diamagnetic inequality", [&] {
        Verdict v;
        const auto* c = check(functionals, "diamagnetic", "min defect / ||grad f||^2");
        v.require(c && c->passed, "min relative defect over 500 fields " + fmt("%.3e", c ? c->value : std::nan("")));
        return v;
    });

    criterion(10, "determinism", [&] {
        Verdict v;
        pipeline(Experiment::verify_functionals, "functionals_rerun", {{"seed", "7"}});
        compare_csvs(v, g_work / "functionals", g_work / "functionals_rerun");
        pipeline(Experiment::profiles, "profiles_noisy_rerun", {{"noise", "0.05"}, {"seed", "11"}});
        compare_csvs(v, g_work / "profiles_noisy", g_work / "profiles_noisy_rerun");
        pipeline(Experiment::pipeline_lemma22, "lemma22_rerun", {{"source_dir", (g_work / "theorem11").string()}});
        compare_csvs(v, g_work / "lemma22", g_work / "lemma22_rerun");
        // A shortened blow-up pipeline, run twice.
        const std::map<std::string, std::string> short_run{{"nodes", "2048"}, {"dt_min", "2e-6"}};
        pipeline(Experiment::evolve, "evolve_a", short_run);
        pipeline(Experiment::evolve, "evolve_b", short_run);
        compare_csvs(v, g_work / "evolve_a", g_work / "evolve_b");
        return v;
    });

    std::printf("%d of 10 criteria failed; total %.1f s\n", g_failures, seconds_since(t_all));
    return g_failures == 0 ? 0 : 1;
}
