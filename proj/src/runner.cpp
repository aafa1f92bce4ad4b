#include "hnls/runner.hpp"

#include "hnls/checkpoint.hpp"
#include "hnls/concentration.hpp"
#include "hnls/errors.hpp"
#include "hnls/evolution.hpp"
#include "hnls/functionals.hpp"
#include "hnls/ground_state.hpp"
#include "hnls/profiles.hpp"
#include "hnls/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hnls {

namespace fs = std::filesystem;
using nlohmann::json;

// --- stage bookkeeping -------------------------------------------------------

bool Stage::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.asserted || c.passed; });
}

Check& Stage::add(std::string n, bool ok, double value, double limit, std::string note) {
    checks.push_back({std::move(n), ok, value, limit, std::move(note), true});
    return checks.back();
}

Check& Stage::report(std::string n, double value, std::string note) {
    checks.push_back({std::move(n), true, value, 0.0, std::move(note), false});
    return checks.back();
}

namespace {

// JSON cannot hold inf/nan; store them as strings.
json number(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

} // namespace

json Stage::to_json() const {
    json arr = json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"asserted", c.asserted}, {"value", number(c.value)},
                       {"limit", number(c.limit)}, {"note", c.note}});
    return {{"stage", name}, {"passed", passed()}, {"checks", arr}};
}

std::string format_stages(const std::vector<Stage>& stages) {
    std::string out;
    char buf[512];
    for (const auto& s : stages) {
        std::snprintf(buf, sizeof buf, "[%s] %s\n", s.passed() ? "ok" : "FAILED", s.name.c_str());
        out += buf;
        for (const auto& c : s.checks) {
            const char* tag = !c.asserted ? "info" : (c.passed ? "pass" : "FAIL");
            if (c.asserted)
                std::snprintf(buf, sizeof buf, "  %-4s %-36s %14.6g  (limit %.6g)%s%s\n", tag, c.name.c_str(), c.value,
                              c.limit, c.note.empty() ? "" : "  ", c.note.c_str());
            else
                std::snprintf(buf, sizeof buf, "  %-4s %-36s %14.6g%s%s\n", tag, c.name.c_str(), c.value,
                              c.note.empty() ? "" : "  ", c.note.c_str());
            out += buf;
        }
    }
    return out;
}

namespace {

// --- small I/O helpers --------------------------------------------------------

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : width_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
        text_ += "\n";
    }
    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }
    void row(const std::vector<double>& values) {
        require(values.size() == width_, ErrorKind::Structural, "CSV row width mismatch");
        char buf[32];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            if (i) text_ += ",";
            text_ += buf;
        }
        text_ += "\n";
    }
    const std::string& text() const { return text_; }

private:
    std::size_t width_;
    std::string text_;
};

std::vector<std::vector<double>> parse_csv(const std::string& text, std::size_t expect_cols, const std::string& what) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    if (!std::getline(in, line)) fail(ErrorKind::Format, what + " is empty");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const auto comma = std::min(line.find(',', pos), line.size());
            const std::string cell = line.substr(pos, comma - pos);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                fail(ErrorKind::Format, what + ": bad number '" + cell + "'");
            row.push_back(v);
            pos = comma + 1;
        }
        if (row.size() != expect_cols) fail(ErrorKind::Format, what + ": wrong number of columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

// Runs one stage body, prefixing any module error with the stage name.
template <class F>
auto in_stage(const std::string& stage, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + stage + ": " + e.detail());
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::Io, "stage " + stage + ": " + e.what());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, "stage " + stage + ": " + e.what());
    }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// --- ground state -------------------------------------------------------------

GroundState solve_from_config(const RunConfig& cfg) {
    const int d = int(cfg.get_int("d"));
    const double c = cfg.get_double("c");
    auto grid = RadialGrid::make(d, c, std::size_t(cfg.get_int("nodes")), cfg.get_double("r_max"));
    GroundStateOptions opts;
    opts.tol = cfg.get_double("gs_tol");
    return solve_ground_state(d, c, grid, opts);
}

Stage ground_state_stage(const fs::path& dir, const GroundState& gs, bool oracle) {
    Stage st{"ground_state", {}};
    const int d = gs.d;
    const auto inv = invariant_report(gs.profile);
    const double h1 = h1_norm(gs.profile);
    st.add("residual / ||Q||_H1", gs.residual / h1 < 1e-8, gs.residual / h1, 1e-8);
    st.add("pohozaev H(Q) = (d/2) M(Q)", rel(inv.hardy, 0.5 * d * inv.mass) < 1e-5, rel(inv.hardy, 0.5 * d * inv.mass),
           1e-5);
    st.add("pohozaev P(Q) = ((d+2)/d) H(Q)", rel(inv.lp_critical, (d + 2.0) / d * inv.hardy) < 1e-5,
           rel(inv.lp_critical, (d + 2.0) / d * inv.hardy), 1e-5);
    st.add("|E(Q)| / H(Q)", std::abs(inv.energy) / inv.hardy < 1e-5, std::abs(inv.energy) / inv.hardy, 1e-5);
    st.report("mass ||Q||^2", gs.mass_sq);
    st.report("iterations", double(gs.iterations));
    json meta = {{"mass_sq", gs.mass_sq}, {"hardy", gs.hardy}, {"critical_lp", gs.critical_lp},
                 {"sharp_constant", gs.sharp_constant}, {"residual", gs.residual}, {"iterations", gs.iterations}};
    if (oracle) {
        const auto pr = shooting_oracle(d, gs.c, gs.profile.radial_grid().r_max());
        const double dist = oracle_distance(gs, pr);
        st.add("shooting oracle relative L2", dist < 1e-3, dist, 1e-3);
        meta["oracle"] = {{"amplitude", pr.amplitude}, {"mass", pr.mass}, {"r_valid", pr.r_valid}, {"distance", dist}};
    }
    write_checkpoint(dir / "gs.bin", gs.profile, meta);
    Csv csv({"r", "q"});
    const auto r = gs.profile.radial_grid().radii();
    for (std::size_t i = 0; i < r.size(); ++i) csv.row({r[i], gs.profile[i].real()});
    write_text(dir / "ground_state.csv", csv.text());
    return st;
}

// --- evolution ----------------------------------------------------------------

EvolveConfig evolve_config(const RunConfig& cfg, const fs::path& dir) {
    EvolveConfig ec;
    ec.delta = cfg.get_double("delta");
    ec.dt_min = cfg.get_double("dt_min");
    ec.t_end = cfg.get_double("t_end");
    ec.splitting = cfg.get_string("splitting") == "strang" ? Splitting::strang : Splitting::triple_jump;
    ec.record_interval = cfg.get_double("record_interval");
    ec.checkpoint_growth = cfg.get_double("checkpoint_growth");
    ec.checkpoint_interval = cfg.get_double("checkpoint_interval");
    ec.edge_tolerance = cfg.get_double("edge_tolerance");
    ec.blowup_growth = cfg.get_double("blowup_growth");
    ec.fit_tolerance = cfg.get_double("fit_tolerance");
    ec.checkpoint_dir = dir / "checkpoints";
    return ec;
}

std::string trace_csv(const EvolutionTrace& tr) {
    Csv csv({"t", "mass", "energy", "hardy", "gradient_term", "lp_critical", "dt"});
    for (const auto& r : tr.rows) csv.row({r.t, r.mass, r.energy, r.hardy, r.gradient_term, r.lp_critical, r.dt});
    return csv.text();
}

json estimate_json(const BlowupEstimate& e) {
    return {{"t_star", e.t_star}, {"t_a", e.t_a}, {"t_b", e.t_b}, {"fit_residual", e.fit_residual},
            {"model_mismatch", e.model_mismatch}, {"rate_infimum", e.rate_infimum}, {"window_rows", e.window_rows}};
}

struct Drifts {
    double mass = 0.0;           // relative, whole run
    double energy = 0.0;         // relative to max(1, |E(0)|), while H < 1e3 H(0)
    double energy_late = 0.0;    // same beyond that threshold
    double growth = 1.0;         // max H / H(0)
};

Drifts drifts(const EvolutionTrace& tr) {
    Drifts d;
    const auto& a = tr.rows.front();
    const double escale = std::max(1.0, std::abs(a.energy));
    for (const auto& r : tr.rows) {
        d.mass = std::max(d.mass, std::abs(r.mass - a.mass) / a.mass);
        const double e = std::abs(r.energy - a.energy) / escale;
        if (r.hardy < 1e3 * a.hardy) d.energy = std::max(d.energy, e);
        else d.energy_late = std::max(d.energy_late, e);
        if (a.hardy > 0.0) d.growth = std::max(d.growth, r.hardy / a.hardy);
    }
    return d;
}

Stage evolve_stage(const fs::path& dir, const EvolutionTrace& tr, const EvolveConfig& ec) {
    Stage st{"evolve", {}};
    const auto dr = drifts(tr);
    st.add("no instability", tr.termination != Termination::instability_detected, 0.0, 0.0,
           to_string(tr.termination) + (tr.termination_detail.empty() ? "" : ": " + tr.termination_detail));
    st.add("mass drift (relative)", dr.mass < 1e-8, dr.mass, 1e-8);
    st.add("energy drift while H < 1e3 H(0)", dr.energy < 1e-5, dr.energy, 1e-5);
    st.report("energy drift beyond 1e3 H(0)", dr.energy_late);
    st.report("hardy growth", dr.growth);
    st.report("steps", double(tr.rows.size() - 1));
    json j = {{"termination", to_string(tr.termination)},
              {"termination_detail", tr.termination_detail},
              {"rows", tr.rows.size()},
              {"checkpoints", tr.checkpoints.size()},
              {"mass_drift", dr.mass},
              {"energy_drift", dr.energy},
              {"energy_drift_late", dr.energy_late},
              {"hardy_growth", dr.growth},
              {"splitting", ec.splitting == Splitting::strang ? "strang" : "triple_jump"}};
    if (tr.blowup) j["blowup"] = estimate_json(*tr.blowup);
    write_text(dir / "evolution.json", j.dump(2) + "\n");
    write_text(dir / "trace.csv", trace_csv(tr));
    return st;
}

Field initial_data(const RunConfig& cfg, const std::optional<GroundState>& gs) {
    const auto kind = cfg.get_string("initial");
    const double amp = cfg.get_double("amplitude");
    if (kind == "ground_state") return gs->profile.scaled(amp);
    if (kind == "checkpoint") return read_checkpoint(cfg.get_string("init_checkpoint")).field.scaled(amp);
    auto grid = RadialGrid::make(int(cfg.get_int("d")), cfg.get_double("c"), std::size_t(cfg.get_int("nodes")),
                                 cfg.get_double("r_max"));
    const double w = cfg.get_double("width");
    return Field::sample_radial(grid, [&](double r) { return cplx(amp * std::exp(-0.5 * r * r / (w * w))); });
}

Stage blowup_stage(const EvolutionTrace& tr, const EvolveConfig& ec) {
    Stage st{"blowup", {}};
    const auto dr = drifts(tr);
    st.add("terminated at dt_min", tr.termination == Termination::blowup_resolved_limit, 0.0, 0.0,
           to_string(tr.termination));
    st.add("hardy growth >= 1e3", dr.growth >= 1e3, dr.growth, 1e3);
    st.add("mass drift < 1e-6", dr.mass < 1e-6, dr.mass, 1e-6);
    const auto e1 = estimate_t_star(tr, ec.blowup_growth, ec.fit_tolerance);
    const auto e2 = estimate_t_star(tr, 10.0 * ec.blowup_growth, ec.fit_tolerance);
    st.report("t_star", e1.t_star);
    st.report("fit residual", e1.fit_residual, e1.model_mismatch ? "model mismatch flagged" : "");
    st.report("fit residual (narrow window)", e2.fit_residual, e2.model_mismatch ? "model mismatch flagged" : "");
    st.add("t_star > t_b", e1.t_star > e1.t_b, e1.t_star - e1.t_b, 0.0);
    st.add("rate_infimum > 0", e1.rate_infimum > 0.0, e1.rate_infimum, 0.0);
    const double shift = rel(e2.rate_infimum, e1.rate_infimum);
    st.add("rate_infimum window stability", shift <= 0.2, shift, 0.2,
           "narrow window rate_infimum " + std::to_string(e2.rate_infimum));
    return st;
}

// --- concentration ------------------------------------------------------------

struct LoadedRun {
    RunManifest manifest;
    RunConfig config;
    GroundState gs;
    EvolutionTrace trace;
    json evolution;
};

LoadedRun load_run(const fs::path& dir) {
    auto manifest = read_manifest(dir);
    verify_manifest(dir, manifest);
    auto config = parse_config(manifest.config_text);
    require(config.has("blowup_growth"), ErrorKind::Precondition, "source run " + dir.string() + " is not an evolution run");
    auto gs = ground_state_from_profile(read_checkpoint(dir / "gs.bin").field);
    EvolutionTrace trace;
    for (const auto& r : parse_csv(read_file(dir / "trace.csv"), 7, "trace.csv"))
        trace.rows.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6]});
    require(!trace.rows.empty(), ErrorKind::Format, "trace.csv has no rows");
    std::vector<fs::path> files;
    for (const auto& a : manifest.artifacts)
        if (a.path.rfind("checkpoints/", 0) == 0) files.push_back(dir / a.path);
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto ck = read_checkpoint(f);
        trace.checkpoints.push_back({ck.meta.at("t").get<double>(), ck.meta.at("hardy").get<double>(),
                                     std::move(ck.field), f.filename().string()});
    }
    auto evolution = json::parse(read_file(dir / "evolution.json"));
    return {std::move(manifest), std::move(config), std::move(gs), std::move(trace), std::move(evolution)};
}

struct ConcentrationOutcome {
    ConcentrationCurve curve;
    Stage stage;
};

ConcentrationOutcome concentration_stage(const fs::path& dir, const RunConfig& cfg, EvolutionTrace& tr,
                                         const GroundState& gs, double blowup_growth, double fit_tolerance) {
    ConcentrationOutcome out{{}, {"concentration", {}}};
    auto& st = out.stage;
    if (!tr.blowup) tr.blowup = estimate_t_star(tr, blowup_growth, fit_tolerance);
    WindowSpec ws;
    ws.kappa = cfg.get_double("kappa");
    ws.beta = cfg.get_double("beta");
    if (cfg.has("t_star") && !cfg.get_string("t_star").empty()) ws.t_star = cfg.get_double("t_star");
    out.curve = concentration_curve(tr, gs, ws);
    const auto& rows = out.curve.rows;
    const int d = gs.d;

    std::vector<std::string> header{"t", "rho", "a_t"};
    for (int a = 1; a <= d; ++a) header.push_back("center_x" + std::to_string(a));
    for (const char* h : {"windowed_mass", "fraction", "hardy", "admissibility"}) header.push_back(h);
    Csv csv(header);
    for (const auto& r : rows) {
        std::vector<double> v{r.t, r.rho, r.a_t};
        for (int a = 0; a < d; ++a) v.push_back(a < int(r.center.size()) ? r.center[std::size_t(a)] : 0.0);
        for (double x : {r.windowed_mass, r.fraction, r.hardy, r.admissibility}) v.push_back(x);
        csv.row(v);
    }
    write_text(dir / "concentration.csv", csv.text());

    const double m0 = tr.rows.front().mass;
    double worst_excess = -1e300;
    for (const auto& r : rows) worst_excess = std::max(worst_excess, r.windowed_mass / m0 - 1.0);
    st.add("windowed mass <= mass(u0)(1 + 1e-8)", worst_excess <= 1e-8, worst_excess, 1e-8, "max relative excess");

    const auto ladder = cfg.get_list("radius_ladder");
    Csv lad({"t", "radius", "windowed_mass"});
    bool monotone = true;
    const std::vector<double> origin(std::size_t(d), 0.0);
    for (const auto& ck : tr.checkpoints) {
        double prev = -1.0;
        auto sorted = ladder;
        std::sort(sorted.begin(), sorted.end());
        for (double r : sorted) {
            const double w = windowed_mass(ck.field, origin, r);
            monotone = monotone && w >= prev;
            prev = w;
            lad.row({ck.t, r, w});
        }
    }
    write_text(dir / "ladder.csv", lad.text());
    st.add("windowed mass monotone in radius", monotone, monotone ? 1.0 : 0.0, 1.0);
    st.add("admissibility a(t) sqrt(H) increasing", out.curve.admissibility_increasing, 0.0, 0.0,
           "over checkpoints in the fit window");

    const auto& last = rows.back();
    const double fmin = cfg.get_double("fraction_min");
    st.add("fraction at final checkpoint", last.fraction >= fmin, last.fraction, fmin);
    // Last decade: checkpoints whose H is within a factor 10 of the final one.
    const double noise = cfg.get_double("fraction_noise");
    double peak = -1e300, drawdown = 0.0;
    std::size_t in_decade = 0;
    for (const auto& r : rows) {
        if (r.hardy < 0.1 * last.hardy) continue;
        ++in_decade;
        peak = std::max(peak, r.fraction);
        drawdown = std::max(drawdown, peak - r.fraction);
    }
    st.add("fraction nondecreasing over last decade", drawdown <= noise && in_decade >= 2, drawdown, noise,
           std::to_string(in_decade) + " checkpoints");

    // The rescaled family of the construction.
    double worst_h = 0.0, worst_m = 0.0;
    std::optional<Field> v_last;
    for (const auto& ck : tr.checkpoints) {
        auto v = rescaled_snapshot(gs, ck.field).field;
        worst_h = std::max(worst_h, rel(hardy_functional(v), gs.hardy));
        worst_m = std::max(worst_m, rel(mass(v), m0));
        v_last = std::move(v);
    }
    st.add("rescaled H(v) = H(Q)", worst_h < 1e-3, worst_h, 1e-3);
    st.add("rescaled mass(v) = mass(u0)", worst_m < 1e-4, worst_m, 1e-4);
    const double p_target = (d + 2.0) / d * gs.hardy;
    const double p_err = rel(lp_power(*v_last, critical_exponent(d)), p_target);
    st.add("final ||v||_p^p vs ((d+2)/d) H(Q)", p_err < 0.05, p_err, 0.05);
    st.report("t_star", out.curve.t_star);
    return out;
}

// --- profiles -------------------------------------------------------------------

int chebyshev_cells(const CartesianGrid& g, const LatticePoint& a, const LatticePoint& b) {
    const int m = g.points_per_axis();
    int worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        int d = ((a[i] - b[i]) % m + m) % m;
        worst = std::max(worst, std::min(d, m - d));
    }
    return worst;
}

void write_profiles(const fs::path& dir, const std::string& prefix, const Decomposition& dec) {
    for (std::size_t j = 0; j < dec.ell; ++j) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%02zu.bin", prefix.c_str(), j + 1);
        json centers = json::array();
        for (const auto& c : dec.centers[j]) centers.push_back(c);
        write_checkpoint(dir / "profiles" / name, dec.profiles[j],
                         {{"profile_index", j + 1}, {"reference", dec.reference}, {"centers", centers}});
    }
}

std::vector<Stage> run_profiles(const fs::path& dir, const RunConfig& cfg) {
    Stage st{"profiles", {}};
    const int d = int(cfg.get_int("d"));
    const int M = int(cfg.get_int("points"));
    auto grid = CartesianGrid::make(d, M, cfg.get_double("half_width"), cfg.get_double("c"));
    const auto n_seq = std::size_t(cfg.get_int("n_seq"));
    const auto amps = cfg.get_list("amplitudes");
    const double width = cfg.get_double("bubble_width");
    const int start = int(cfg.get_int("start_offset"));

    std::vector<double> c0(std::size_t(d), grid->coordinate(M / 2));
    std::vector<Field> bubbles;
    std::vector<std::vector<LatticePoint>> laws(amps.size());
    for (std::size_t j = 0; j < amps.size(); ++j) {
        bubbles.push_back(gaussian_bubble(grid, amps[j], width, c0));
        for (std::size_t n = 1; n <= n_seq; ++n)
            laws[j].push_back(LatticePoint(std::size_t(d), j == 0 ? 0 : int(j) * (start + int(n))));
    }
    const double noise_norm = cfg.get_double("noise");
    std::optional<Field> noise;
    if (noise_norm > 0.0) noise = broadband_noise(grid, noise_norm, cfg.rng_seed);
    const auto seq = generate_synthetic(bubbles, laws, noise, n_seq);

    double eta = cfg.get_double("eta_min");
    if (eta == 0.0) eta = default_eta_min(seq);
    const auto dec = extract_profiles(seq, std::size_t(cfg.get_int("ell_max")), eta);
    double p = cfg.get_double("p");
    if (p == 0.0) p = critical_exponent(d);
    const auto rep = defect_report(dec, p);

    Csv csv({"n", "min_separation", "pythagorean_defect", "hardy_defect", "residual_lp"});
    for (const auto& r : rep.rows)
        csv.row({double(r.n), r.min_separation, r.pythagorean_defect, r.hardy_defect, r.residual_lp});
    write_text(dir / "defects.csv", csv.text());
    write_profiles(dir, "profile", dec);

    st.add("reconstruction exact", reconstruction_defect(dec) == 0.0, reconstruction_defect(dec), 0.0);
    st.add("profile count", dec.ell == seq.truth.size() && !dec.truncated, double(dec.ell), double(seq.truth.size()),
           dec.truncated ? "truncated" : "");
    // Match every true bubble to the extracted profile nearest at the final index.
    int worst_cells = 0;
    double worst_mass = 0.0;
    for (const auto& gt : seq.truth) {
        std::size_t best = dec.ell;
        int best_d = 1 << 30;
        for (std::size_t j = 0; j < dec.ell; ++j) {
            const int dd = chebyshev_cells(*grid, dec.centers[j].back(), gt.centers.back());
            if (dd < best_d) best_d = dd, best = j;
        }
        if (best == dec.ell) {
            worst_cells = 1 << 30;
            continue;
        }
        for (std::size_t n = 0; n < n_seq; ++n)
            worst_cells = std::max(worst_cells, chebyshev_cells(*grid, dec.centers[best][n], gt.centers[n]));
        worst_mass = std::max(worst_mass, rel(mass(dec.profiles[best]), mass(gt.profile)));
    }
    st.add("centre recovery (cells)", worst_cells <= 1, double(worst_cells), 1.0);
    st.add("profile mass (relative)", worst_mass < 1e-2, worst_mass, 1e-2);

    const auto& last = rep.rows.back();
    const double vm = mass(seq.entries.back()), vh = hardy_functional(seq.entries.back());
    if (!noise) {
        st.add("pythagorean defect at n = N (relative)", last.pythagorean_defect / vm < 1e-3,
               last.pythagorean_defect / vm, 1e-3);
        st.add("hardy defect at n = N (relative)", last.hardy_defect / std::abs(vh) < 1e-3,
               last.hardy_defect / std::abs(vh), 1e-3);
        bool pyth_dec = true, hardy_dec = true;
        for (std::size_t n = rep.rows.size() / 2 + 1; n < rep.rows.size(); ++n) {
            pyth_dec = pyth_dec && rep.rows[n].pythagorean_defect < rep.rows[n - 1].pythagorean_defect;
            hardy_dec = hardy_dec && rep.rows[n].hardy_defect < rep.rows[n - 1].hardy_defect;
        }
        st.add("pythagorean defect decreasing (final half)", pyth_dec, pyth_dec, 1.0);
        st.add("hardy defect decreasing (final half)", hardy_dec, hardy_dec, 1.0);
    } else {
        const double floor = lp_norm(*noise, p);
        double worst = 0.0;
        for (const auto& r : rep.rows) worst = std::max(worst, r.residual_lp);
        st.add("residual L^p within noise floor", worst <= 2.0 * floor, worst, 2.0 * floor, "2 ||w||_p");
    }
    json j = {{"ell", dec.ell}, {"truncated", dec.truncated}, {"eta_min", eta}, {"estimate_norms", dec.estimate_norms}, {"p", p}};
    write_text(dir / "decomposition.json", j.dump(2) + "\n");
    return {st};
}

// --- functionals ------------------------------------------------------------------

std::vector<Stage> run_functionals(const fs::path& dir, const RunConfig& cfg) {
    std::vector<Stage> stages;
    const auto gs = in_stage("ground_state", [&] { return solve_from_config(cfg); });
    Stage gn{"gagliardo_nirenberg", {}};
    const double q_ratio = gn_ratio(gs.profile, gs);
    gn.add("gn_ratio(Q) = 1", std::abs(q_ratio - 1.0) < 1e-4, q_ratio, 1.0 + 1e-4);
    Rng rng(cfg.rng_seed);
    Csv csv({"sample", "gn_ratio", "hardy_margin_relative"});
    double worst = 0.0, worst_margin = 1.0;
    const auto count = cfg.get_int("gn_samples");
    for (long long i = 0; i < count; ++i) {
        // Odd samples probe the neighbourhood of the optimiser: a dilated
        // ground state plus a small random perturbation.
        auto f = random_radial_field(gs.profile.radial_grid_ptr(), rng);
        if (i % 2 == 1) {
            const double lambda = std::exp(uniform(rng, -0.7, 0.7));
            const double eps = uniform(rng, 0.0, 0.3) * std::sqrt(gs.mass_sq / mass(f));
            f = rescale(gs.profile, lambda).field + f.scaled(eps);
        }
        const double r = gn_ratio(f, gs);
        const double m = hardy_margin(f).relative;
        worst = std::max(worst, r);
        worst_margin = std::min(worst_margin, m);
        csv.row({double(i), r, m});
    }
    write_text(dir / "functionals.csv", csv.text());
    gn.add("max gn_ratio over samples", worst <= 1.0 + 1e-3, worst, 1.0 + 1e-3);
    gn.add("min relative Hardy margin", worst_margin >= -1e-12, worst_margin, -1e-12);
    stages.push_back(gn);

    Stage dia{"diamagnetic", {}};
    auto grid = CartesianGrid::make(int(cfg.get_int("d")), int(cfg.get_int("points")), cfg.get_double("half_width"),
                                    cfg.get_double("c"));
    Csv dcsv({"sample", "diamagnetic_defect", "gradient_norm_sq"});
    double worst_rel = 1e300;
    const auto dcount = cfg.get_int("diamagnetic_samples");
    for (long long i = 0; i < dcount; ++i) {
        const auto f = (i % 2 == 0) ? random_smooth_cartesian(grid, rng) : random_rough_cartesian(grid, rng);
        const double defect = diamagnetic_defect(f);
        const double g2 = gradient_norm_sq(f);
        worst_rel = std::min(worst_rel, defect / g2);
        dcsv.row({double(i), defect, g2});
    }
    write_text(dir / "diamagnetic.csv", dcsv.text());
    dia.add("min defect / ||grad f||^2", worst_rel >= -1e-8, worst_rel, -1e-8);
    stages.push_back(dia);
    return stages;
}

// --- lower bound on the extracted profile mass ----------------------------------------

struct Exported {
    FieldSequence seq;
    double worst_mapping = 0.0;
};

Exported export_sequence(const std::vector<Field>& radial, CartesianGridPtr grid, double taper) {
    Exported ex;
    const double L = grid->half_width();
    for (const auto& f : radial) {
        const auto tapered = taper_radial(f, taper * L, L);
        auto cart = radial_to_cartesian(tapered, grid);
        ex.worst_mapping = std::max(ex.worst_mapping, rel(mass(cart), mass(tapered)));
        ex.seq.entries.push_back(std::move(cart));
    }
    return ex;
}

Stage lemma22_checks(const std::string& name, const Lemma22Result& res, const Exported& ex, bool equality,
                     bool absolute_bound) {
    Stage st{name, {}};
    st.add("radial-to-Cartesian mass error", ex.worst_mapping < 1e-3, ex.worst_mapping, 1e-3);
    st.add("extraction not truncated", !res.truncated, res.truncated, 0.0);
    st.add("||V|| >= (1 - tol) bound", res.pass, res.profile_norm / res.bound, 1.0 - res.tolerance, "ratio to bound");
    if (equality)
        st.add("||V|| / bound within tolerance of 1", std::abs(res.profile_norm / res.bound - 1.0) <= res.tolerance,
               std::abs(res.profile_norm / res.bound - 1.0), res.tolerance);
    if (absolute_bound)
        st.add("||V|| >= 0.95 ||Q||", res.profile_norm >= 0.95 * res.q_norm, res.profile_norm / res.q_norm, 0.95);
    st.add("summed GN bound", res.gn_sum <= res.gn_cap * (1.0 + 1e-3), res.gn_sum / res.gn_cap, 1.0 + 1e-3,
           "sum ||V^j||_p^p / (C_d max ||V^j||^{4/d} M)");
    st.report("m", res.m);
    st.report("M", res.M);
    st.report("bound", res.bound);
    st.report("||V||", res.profile_norm);
    st.report("||Q||", res.q_norm);
    return st;
}

json lemma22_json(const Lemma22Result& r) {
    return {{"m", r.m}, {"M", r.M}, {"bound", r.bound}, {"profile_norm", r.profile_norm}, {"q_norm", r.q_norm},
            {"tolerance", r.tolerance}, {"pass", r.pass}, {"truncated", r.truncated}, {"gn_sum", r.gn_sum},
            {"gn_cap", r.gn_cap}, {"ell", r.decomposition.ell}};
}

std::vector<Stage> run_lemma22(const fs::path& dir, const RunConfig& cfg) {
    std::vector<Stage> stages;
    const fs::path src = cfg.get_string("source_dir");
    auto lr = in_stage("source", [&] { return load_run(src); });
    Stage source{"source", {}};
    source.add("manifest hashes verified", true, double(lr.manifest.artifacts.size()), 0.0, "artifacts");
    const auto term = lr.evolution.at("termination").get<std::string>();
    if (term != to_string(Termination::blowup_resolved_limit))
        fail(ErrorKind::Precondition, "stage source: run " + src.string() + " has no resolved blow-up (" + term + ")");
    in_stage("source", [&] {
        lr.trace.blowup = estimate_t_star(lr.trace, lr.config.get_double("blowup_growth"),
                                          lr.config.get_double("fit_tolerance"));
        return 0;
    });
    stages.push_back(source);

    const auto& gs = lr.gs;
    auto grid = CartesianGrid::make(gs.d, int(cfg.get_int("points")), cfg.get_double("half_width"), gs.c);
    const double taper = cfg.get_double("taper");
    const auto ell_max = std::size_t(cfg.get_int("ell_max"));
    const double tol = cfg.get_double("tolerance");
    const auto K = std::size_t(cfg.get_int("snapshots"));
    Csv csv({"sequence", "n", "t", "mass", "hardy", "lp_critical"});
    json out;

    stages.push_back(in_stage("constant_q", [&] {
        const auto ex = export_sequence(std::vector<Field>(K, gs.profile), grid, taper);
        const auto res = lemma22_harness(ex.seq, gs, ell_max, tol);
        for (std::size_t n = 0; n < K; ++n) {
            const auto& v = ex.seq.entries[n];
            csv.row({0.0, double(n + 1), 0.0, mass(v), hardy_functional(v), lp_power(v, critical_exponent(gs.d))});
        }
        write_profiles(dir, "constant_q", res.decomposition);
        out["constant_q"] = lemma22_json(res);
        return lemma22_checks("constant_q", res, ex, true, false);
    }));

    stages.push_back(in_stage("snapshots", [&] {
        const auto& cks = lr.trace.checkpoints;
        require(cks.size() >= K, ErrorKind::Precondition, "source run has fewer checkpoints than requested snapshots");
        std::vector<Field> vs;
        std::vector<double> ts;
        for (std::size_t i = cks.size() - K; i < cks.size(); ++i) {
            vs.push_back(rescaled_snapshot(gs, cks[i].field).field);
            ts.push_back(cks[i].t);
        }
        const auto ex = export_sequence(vs, grid, taper);
        const auto res = lemma22_harness(ex.seq, gs, ell_max, tol);
        for (std::size_t n = 0; n < K; ++n) {
            const auto& v = ex.seq.entries[n];
            csv.row({1.0, double(n + 1), ts[n], mass(v), hardy_functional(v), lp_power(v, critical_exponent(gs.d))});
        }
        write_profiles(dir, "snapshots", res.decomposition);
        out["snapshots"] = lemma22_json(res);
        return lemma22_checks("snapshots", res, ex, false, true);
    }));
    write_text(dir / "lemma22.csv", csv.text());
    write_text(dir / "lemma22.json", out.dump(2) + "\n");
    return stages;
}

// --- experiments ----------------------------------------------------------------------

std::vector<Stage> run_ground_state(const fs::path& dir, const RunConfig& cfg) {
    const auto gs = in_stage("ground_state", [&] { return solve_from_config(cfg); });
    return {in_stage("ground_state", [&] { return ground_state_stage(dir, gs, cfg.get_bool("oracle")); })};
}

std::vector<Stage> run_evolve(const fs::path& dir, const RunConfig& cfg, bool pipeline) {
    std::vector<Stage> stages;
    std::optional<GroundState> gs;
    if (pipeline || cfg.get_string("initial") == "ground_state") {
        gs = in_stage("ground_state", [&] { return solve_from_config(cfg); });
        stages.push_back(in_stage("ground_state", [&] { return ground_state_stage(dir, *gs, false); }));
    }
    const auto ec = evolve_config(cfg, dir);
    auto tr = in_stage("evolve", [&] {
        const auto u0 = pipeline ? gs->profile.scaled(cfg.get_double("amplitude")) : initial_data(cfg, gs);
        return evolve(u0, ec);
    });
    stages.push_back(in_stage("evolve", [&] { return evolve_stage(dir, tr, ec); }));
    if (!pipeline) return stages;
    stages.push_back(in_stage("blowup", [&] { return blowup_stage(tr, ec); }));
    stages.push_back(in_stage("concentration", [&] {
        return concentration_stage(dir, cfg, tr, *gs, ec.blowup_growth, ec.fit_tolerance).stage;
    }));
    return stages;
}

std::vector<Stage> run_concentrate(const fs::path& dir, const RunConfig& cfg) {
    auto lr = in_stage("source", [&] { return load_run(cfg.get_string("trace_dir")); });
    return {in_stage("concentration", [&] {
        return concentration_stage(dir, cfg, lr.trace, lr.gs, lr.config.get_double("blowup_growth"),
                                   lr.config.get_double("fit_tolerance"))
            .stage;
    })};
}

// Clears the artifacts of a previous completed run; refuses foreign content.
void prepare_directory(const fs::path& dir) {
    if (fs::exists(dir / kManifestName)) {
        const auto old = read_manifest(dir);
        for (const auto& a : old.artifacts) fs::remove(dir / a.path);
        fs::remove(dir / kManifestName);
        std::vector<fs::path> dirs;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_directory()) dirs.push_back(e.path());
        std::sort(dirs.rbegin(), dirs.rend());
        for (const auto& p : dirs)
            if (fs::is_empty(p)) fs::remove(p);
    }
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != kLockName)
            fail(ErrorKind::Io, "output directory " + dir.string() + " has content not produced by a previous run: " +
                                    e.path().filename().string());
}

} // namespace

RunResult run(RunConfig config) {
    config.validate();
    RunResult result;
    result.dir = config.output_dir;
    const auto t0 = std::chrono::steady_clock::now();
    DirectoryLock lock(result.dir);
    prepare_directory(result.dir);
    write_text(result.dir / "config.txt", config.text());

    const auto& dir = result.dir;
    switch (config.experiment) {
    case Experiment::ground_state: result.stages = run_ground_state(dir, config); break;
    case Experiment::evolve: result.stages = run_evolve(dir, config, false); break;
    case Experiment::concentrate: result.stages = run_concentrate(dir, config); break;
    case Experiment::profiles: result.stages = in_stage("profiles", [&] { return run_profiles(dir, config); }); break;
    case Experiment::verify_functionals: result.stages = run_functionals(dir, config); break;
    case Experiment::pipeline_theorem11: result.stages = run_evolve(dir, config, true); break;
    case Experiment::pipeline_lemma22: result.stages = run_lemma22(dir, config); break;
    }

    json stages = json::array();
    for (const auto& s : result.stages) stages.push_back(s.to_json());
    write_text(dir / "stages.json", stages.dump(2) + "\n");

    result.passed = std::all_of(result.stages.begin(), result.stages.end(), [](const Stage& s) { return s.passed(); });
    auto& m = result.manifest;
    m.experiment = to_string(config.experiment);
    m.config_text = config.text();
    m.passed = result.passed;
    for (const auto& s : result.stages) m.stages[s.name] = s.passed();
    m.artifacts = scan_artifacts(dir);
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, m);
    return result;
}

} // namespace hnls
