#pragma once

// Experiment runner: executes a validated RunConfig inside its output
// directory, writes CSV/JSON artifacts and checkpoints, evaluates the stage
// assertions and finally the manifest.
//
// Directory layout (files present depend on the experiment):
//   config.txt            canonical copy of the configuration
//   gs.bin                ground-state checkpoint
//   ground_state.csv      r,q
//   trace.csv             t,mass,energy,hardy,gradient_term,lp_critical,dt
//   checkpoints/*.bin     evolution snapshots (meta: t, hardy, index)
//   evolution.json        termination, drifts, blow-up estimate
//   concentration.csv     t,rho,a_t,center_x1..,windowed_mass,fraction,hardy,admissibility
//   ladder.csv            t,radius,windowed_mass
//   defects.csv           n,min_separation,pythagorean_defect,hardy_defect,residual_lp
//   lemma22.csv / .json   exported sequences and verdicts
//   functionals.csv       per-sample inequality audits
//   stages.json           every check with its value and limit
//   manifest.json         written last

#include "hnls/config.hpp"
#include "hnls/manifest.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hnls {

struct Check {
    std::string name;
    bool passed = true;
    double value = 0.0;
    double limit = 0.0;
    std::string note;
    bool asserted = true; // false: reported only
};

struct Stage {
    std::string name;
    std::vector<Check> checks;

    bool passed() const;
    Check& add(std::string name, bool passed, double value, double limit, std::string note = {});
    Check& report(std::string name, double value, std::string note = {});
    nlohmann::json to_json() const;
};

struct RunResult {
    std::filesystem::path dir;
    std::vector<Stage> stages;
    RunManifest manifest;
    bool passed = false;
};

/// Validates `config`, takes the directory lock, runs the experiment and
/// writes the manifest. A directory holding a previous completed run is
/// cleared of that run's artifacts first; any other existing content is an
/// error. Module errors propagate as hnls::Error prefixed with the stage name.
RunResult run(RunConfig config);

/// Formats the checks as an aligned text table.
std::string format_stages(const std::vector<Stage>& stages);

} // namespace hnls
