#pragma once

// Radial time integration of  i u_t + Δu + c/|x|^2 u + |u|^{4/d} u = 0.
//
// Strang splitting on the reduced field g = r^{(d-2)/2} u: a half step of the
// exact nonlinear phase g <- g exp(i tau |u|^{4/d}), a Crank-Nicolson step of
// the linear flow  i r^2 g_t = (-d²/ds² + kappa^2) g, and another half phase.
// The Crank-Nicolson step is unitary in the weighted norm sum r_i^2 |g_i|^2,
// which is the discrete mass, so mass is conserved up to rounding.

#include "hnls/grids.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hnls {

/// strang: second order. triple_jump: Yoshida's fourth-order composition of
/// three Strang steps with weights w1, w0, w1.
enum class Splitting { strang, triple_jump };

struct EvolutionState {
    double t = 0.0;
    Field field;
    double dt = 0.0;
    std::size_t step_count = 0;
};

enum class Termination { t_end_reached, blowup_resolved_limit, instability_detected };

std::string to_string(Termination t);

struct TraceRow {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double hardy = 0.0;
    double gradient_term = 0.0;
    double lp_critical = 0.0;
    double dt = 0.0;
};

struct Snapshot {
    double t = 0.0;
    double hardy = 0.0;
    Field field;
    std::string file; // empty unless written to disk
};

struct BlowupEstimate {
    double t_star = 0.0;
    double t_a = 0.0, t_b = 0.0;    // fit window
    double fit_residual = 0.0;      // RMS of (y - fit) / y, y = 1/||grad u||^2
    bool model_mismatch = false;    // fit_residual above the configured tolerance
    double rate_infimum = 0.0;      // min over window of ||grad u|| sqrt(t_star - t)
    std::size_t window_rows = 0;
};

struct EvolutionTrace {
    std::vector<TraceRow> rows;
    std::vector<Snapshot> checkpoints;
    Termination termination = Termination::t_end_reached;
    std::string termination_detail;
    std::optional<BlowupEstimate> blowup;
};

struct EvolveConfig {
    double delta = 0.01;               // dt = delta / max(1, H(u))
    double dt_min = 1e-9;              // adaptive dt below this ends the run
    double t_end = 1.0;
    double fixed_dt = 0.0;             // > 0 disables adaptive stepping
    bool nonlinear = true;
    Splitting splitting = Splitting::strang;
    double record_interval = 0.0;      // 0 records every step
    double checkpoint_interval = 0.0;  // time cadence; 0 disables
    double checkpoint_growth = 1.2;    // checkpoint when H grows by this factor; 0 disables
    double edge_fraction = 0.1;        // outer part of the grid watched by the monitor
    double edge_tolerance = 1e-8;      // max |u| there relative to max |u|; <= 0 disables
    std::size_t max_steps = 50'000'000;
    double blowup_growth = 100.0;      // window threshold for estimate_t_star
    double fit_tolerance = 1e-2;       // fit residual above this flags model mismatch
    std::filesystem::path checkpoint_dir; // empty keeps checkpoints in memory only
};

/// One Strang step of size dt.
EvolutionState step(const EvolutionState& state, double dt, bool nonlinear = true,
                    Splitting scheme = Splitting::strang);

/// delta / max(1, hardy_functional(state.field)).
double adaptive_dt(const EvolutionState& state, double delta);

EvolutionTrace evolve(const Field& u0, const EvolveConfig& config = {});

/// Fit of 1/||grad u||^2 = alpha (t_star - t) over the trailing rows with
/// hardy >= growth * hardy(0).
BlowupEstimate estimate_t_star(std::span<const TraceRow> rows, double growth = 100.0,
                               double fit_tolerance = 1e-2);
BlowupEstimate estimate_t_star(const EvolutionTrace& trace, double growth = 100.0,
                               double fit_tolerance = 1e-2);

} // namespace hnls
