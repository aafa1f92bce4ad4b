#include "hnls/config.hpp"

#include "hnls/checkpoint.hpp"
#include "hnls/errors.hpp"
#include "hnls/grids.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace hnls {

namespace {

struct Name {
    Experiment e;
    const char* s;
};

constexpr Name kNames[] = {
    {Experiment::ground_state, "ground_state"},
    {Experiment::evolve, "evolve"},
    {Experiment::concentrate, "concentrate"},
    {Experiment::profiles, "profiles"},
    {Experiment::verify_functionals, "verify_functionals"},
    {Experiment::pipeline_theorem11, "pipeline_theorem11"},
    {Experiment::pipeline_lemma22, "pipeline_lemma22"},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

void append(std::vector<KeySpec>& out, std::initializer_list<KeySpec> keys) { out.insert(out.end(), keys); }

void physics_keys(std::vector<KeySpec>& k) {
    append(k, {{"d", "3", "spatial dimension (>= 3)"},
               {"c", "0.1", "inverse-square coupling, 0 < c < (d-2)^2/4"}});
}

void radial_keys(std::vector<KeySpec>& k) {
    append(k, {{"nodes", "8192", "radial grid nodes"},
               {"r_max", "50", "outer radius of the radial grid"},
               {"gs_tol", "1e-10", "ground-state iteration tolerance"}});
}

void evolve_keys(std::vector<KeySpec>& k) {
    append(k, {{"amplitude", "1.1", "initial data amplitude times Q (or of the Gaussian)"},
               {"t_end", "5", "final time"},
               {"delta", "0.02", "adaptive step factor, dt = delta / max(1, H(u))"},
               {"dt_min", "5e-8", "adaptive dt below this ends the run"},
               {"splitting", "triple_jump", "strang | triple_jump"},
               {"record_interval", "0", "trace row spacing in t; 0 records every step"},
               {"checkpoint_growth", "1.2", "checkpoint whenever H grows by this factor"},
               {"checkpoint_interval", "0", "additional checkpoints every this much time; 0 disables"},
               {"edge_tolerance", "1e-8", "edge monitor threshold relative to max |u|"},
               {"blowup_growth", "100", "fit window: rows with H >= this times H(0)"},
               {"fit_tolerance", "0.01", "fit residual above this flags model mismatch"}});
}

void window_keys(std::vector<KeySpec>& k) {
    append(k, {{"kappa", "1", "window prefactor"},
               {"beta", "0.25", "window exponent, in (0, 1/2)"},
               {"radius_ladder", "0.05,0.1,0.2,0.5,1,2,5", "radii of the windowed-mass monotonicity audit"},
               {"fraction_noise", "0.02", "allowed decrease of the concentrated fraction over the last decade"},
               {"fraction_min", "0.9", "required fraction at the final checkpoint"}});
}

double parse_double(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    in.imbue(std::locale::classic());
    double x = 0.0;
    in >> x;
    if (in.fail() || !in.eof()) fail(ErrorKind::Format, "key '" + key + "': not a number: '" + v + "'");
    return x;
}

} // namespace

std::string to_string(Experiment e) {
    for (const auto& n : kNames)
        if (n.e == e) return n.s;
    return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '-', '_');
    for (const auto& n : kNames)
        if (s == n.s) return n.e;
    fail(ErrorKind::Parameter, "unknown experiment '" + std::string(name) + "'");
}

std::vector<KeySpec> known_keys(Experiment e) {
    std::vector<KeySpec> k;
    append(k, {{"experiment", "", "experiment name", true},
               {"output_dir", "", "run directory (created; owned exclusively during the run)", true},
               {"seed", "0", "random seed"}});
    switch (e) {
    case Experiment::ground_state:
        physics_keys(k);
        radial_keys(k);
        append(k, {{"oracle", "true", "also run the shooting oracle and compare"}});
        break;
    case Experiment::evolve:
        physics_keys(k);
        radial_keys(k);
        append(k, {{"initial", "ground_state", "ground_state | gaussian | checkpoint"},
                   {"width", "1", "Gaussian initial data width"},
                   {"init_checkpoint", "", "initial data file when initial = checkpoint"}});
        evolve_keys(k);
        break;
    case Experiment::concentrate:
        append(k, {{"trace_dir", "", "directory of a completed evolve or pipeline_theorem11 run", true},
                   {"t_star", "", "override of the estimated blow-up time"}});
        window_keys(k);
        break;
    case Experiment::profiles:
        append(k, {{"d", "3", "spatial dimension"},
                   {"c", "0.1", "inverse-square coupling"},
                   {"points", "64", "lattice points per axis"},
                   {"half_width", "16", "box half-width L"},
                   {"n_seq", "16", "sequence length"},
                   {"bubble_width", "3", "Gaussian width of both bubbles"},
                   {"amplitudes", "1,0.8", "bubble amplitudes"},
                   {"start_offset", "15", "second bubble shift at n is (start_offset + n) cells per axis"},
                   {"noise", "0", "L^2 norm of the broadband noise"},
                   {"ell_max", "4", "maximum number of extracted profiles"},
                   {"eta_min", "0", "extraction threshold; 0 selects 1e-2 max_n ||v_n||_H1"},
                   {"p", "0", "Lebesgue exponent of the residual; 0 selects 2 + 4/d"}});
        break;
    case Experiment::verify_functionals:
        physics_keys(k);
        radial_keys(k);
        append(k, {{"gn_samples", "200", "random radial fields for the Gagliardo-Nirenberg audit"},
                   {"diamagnetic_samples", "500", "random Cartesian fields for the diamagnetic audit"},
                   {"points", "16", "lattice points per axis for the diamagnetic audit"},
                   {"half_width", "8", "box half-width for the diamagnetic audit"}});
        break;
    case Experiment::pipeline_theorem11:
        physics_keys(k);
        radial_keys(k);
        evolve_keys(k);
        window_keys(k);
        break;
    case Experiment::pipeline_lemma22:
        append(k, {{"source_dir", "", "directory of a completed pipeline_theorem11 run", true},
                   {"points", "64", "lattice points per axis"},
                   {"half_width", "8", "box half-width L"},
                   {"snapshots", "8", "number of final checkpoints exported"},
                   {"taper", "0.75", "rescaled snapshots are tapered to zero between taper*L and L"},
                   {"ell_max", "4", "maximum number of extracted profiles"},
                   {"tolerance", "0.05", "relative slack of the lower bound"}});
        break;
    }
    return k;
}

std::string RunConfig::get_string(const std::string& key) const {
    const auto it = parameters.find(key);
    if (it == parameters.end()) fail(ErrorKind::Parameter, "missing key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

long long RunConfig::get_int(const std::string& key) const {
    const auto v = get_string(key);
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        fail(ErrorKind::Format, "key '" + key + "': not an integer: '" + v + "'");
    return x;
}

bool RunConfig::get_bool(const std::string& key) const {
    const auto v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorKind::Format, "key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
    std::vector<double> out;
    std::string item;
    std::istringstream in(get_string(key));
    while (std::getline(in, item, ','))
        if (!trim(item).empty()) out.push_back(parse_double(key, trim(item)));
    return out;
}

void RunConfig::validate() {
    parameters["experiment"] = to_string(experiment);
    if (!output_dir.empty()) parameters["output_dir"] = output_dir.string();
    const auto keys = known_keys(experiment);
    std::set<std::string> names;
    for (const auto& k : keys) names.insert(k.name);
    for (const auto& [key, value] : parameters)
        if (!names.count(key))
            fail(ErrorKind::Parameter, "unknown key '" + key + "' for experiment " + to_string(experiment));
    for (const auto& k : keys) {
        if (has(k.name)) continue;
        if (k.required)
            fail(ErrorKind::Parameter, "missing required key '" + k.name + "'");
        parameters[k.name] = k.default_value;
    }
    output_dir = get_string("output_dir");
    const long long seed = get_int("seed");
    require(seed >= 0, ErrorKind::Parameter, "seed must be nonnegative");
    rng_seed = std::uint64_t(seed);

    auto positive = [&](const char* key) {
        require(get_double(key) > 0.0, ErrorKind::Parameter, std::string(key) + " must be positive");
    };
    auto positive_int = [&](const char* key) {
        require(get_int(key) > 0, ErrorKind::Parameter, std::string(key) + " must be a positive integer");
    };
    if (has("d")) {
        const long long d = get_int("d");
        require(d >= 3 && d <= 12, ErrorKind::Parameter, "d must lie in 3..12");
        const double c = get_double("c");
        const double cstar = hardy_constant(int(d));
        require(c > 0.0 && c < cstar, ErrorKind::Parameter,
                "c must lie in (0, (d-2)^2/4) = (0, " + std::to_string(cstar) + ")");
    }
    if (has("nodes")) {
        positive_int("nodes");
        positive("r_max");
        positive("gs_tol");
    }
    if (has("delta")) {
        const double delta = get_double("delta");
        require(delta > 0.0 && delta < 1.0, ErrorKind::Parameter, "delta must lie in (0, 1)");
        positive("t_end");
        positive("dt_min");
        positive("amplitude");
        const auto s = get_string("splitting");
        require(s == "strang" || s == "triple_jump", ErrorKind::Parameter, "splitting must be strang or triple_jump");
        require(get_double("checkpoint_growth") == 0.0 || get_double("checkpoint_growth") > 1.0, ErrorKind::Parameter,
                "checkpoint_growth must be 0 or > 1");
        positive("blowup_growth");
        positive("fit_tolerance");
    }
    if (has("initial")) {
        const auto s = get_string("initial");
        require(s == "ground_state" || s == "gaussian" || s == "checkpoint", ErrorKind::Parameter,
                "initial must be ground_state, gaussian or checkpoint");
        if (s == "checkpoint")
            require(!get_string("init_checkpoint").empty(), ErrorKind::Parameter,
                    "initial = checkpoint needs init_checkpoint");
        positive("width");
    }
    if (has("beta")) {
        positive("kappa");
        const double beta = get_double("beta");
        require(beta > 0.0 && beta < 0.5, ErrorKind::Parameter, "beta must lie in (0, 1/2)");
        for (double r : get_list("radius_ladder")) require(r > 0.0, ErrorKind::Parameter, "ladder radii must be positive");
        if (has("t_star") && !get_string("t_star").empty()) get_double("t_star");
    }
    if (experiment == Experiment::profiles) {
        positive_int("points");
        positive("half_width");
        positive_int("n_seq");
        positive("bubble_width");
        require(!get_list("amplitudes").empty(), ErrorKind::Parameter, "at least one amplitude");
        require(get_double("noise") >= 0.0, ErrorKind::Parameter, "noise must be nonnegative");
        require(get_double("eta_min") >= 0.0, ErrorKind::Parameter, "eta_min must be nonnegative");
        require(get_int("ell_max") >= 0, ErrorKind::Parameter, "ell_max must be nonnegative");
    }
    if (experiment == Experiment::verify_functionals) {
        positive_int("gn_samples");
        positive_int("diamagnetic_samples");
        positive_int("points");
        positive("half_width");
    }
    if (experiment == Experiment::pipeline_lemma22) {
        positive_int("points");
        positive("half_width");
        positive_int("snapshots");
        const double taper = get_double("taper");
        require(taper > 0.0 && taper < 1.0, ErrorKind::Parameter, "taper must lie in (0, 1)");
        const double tol = get_double("tolerance");
        require(tol >= 0.0 && tol < 1.0, ErrorKind::Parameter, "tolerance must lie in [0, 1)");
    }
}

std::string RunConfig::text() const {
    std::string out;
    for (const auto& [key, value] : parameters) out += key + " = " + value + "\n";
    return out;
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    bool have_experiment = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Format, "config line " + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) fail(ErrorKind::Format, "config line " + std::to_string(lineno) + ": empty key");
        if (cfg.has(key)) fail(ErrorKind::Format, "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.set(key, value);
        if (key == "experiment") {
            cfg.experiment = experiment_from_string(value);
            have_experiment = true;
        }
        if (key == "output_dir") cfg.output_dir = value;
    }
    if (!have_experiment) fail(ErrorKind::Format, "config has no 'experiment' key");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

} // namespace hnls
