#pragma once

// Mass concentration along a blow-up run. With rho(t) = sqrt(H(Q) / H(u(t)))
// the rescaled family v(t, x) = rho^{d/2} u(t, rho x) keeps the mass of u and
// has H(v) = H(Q). Windows are balls of radius a(t) = kappa (t_star - t)^beta,
// centred at the origin for radial runs.

#include "hnls/evolution.hpp"
#include "hnls/ground_state.hpp"

#include <optional>
#include <span>
#include <vector>

namespace hnls {

struct WindowSpec {
    double kappa = 1.0;
    double beta = 0.25;              // must lie in (0, 1/2)
    std::optional<double> t_star;    // anchors a(t); defaults to the trace's estimate
};

struct ConcentrationRow {
    double t = 0.0;
    double rho = 0.0;
    double a_t = 0.0;
    std::vector<double> center;
    double windowed_mass = 0.0;
    double fraction = 0.0;           // windowed_mass / ||Q||^2
    double hardy = 0.0;
    double admissibility = 0.0;      // a(t) sqrt(H(u(t)))
};

struct ConcentrationCurve {
    std::vector<ConcentrationRow> rows;
    double t_star = 0.0;
    double window_start = 0.0;       // start of the blow-up fit window
    bool admissibility_increasing = false; // over rows with t >= window_start
};

double rho(const GroundState& gs, const Field& f);

/// v = rho^{d/2} f(rho x). Radial fields are returned on the dilated log grid
/// (same nodes in s, shifted by -ln rho), which makes the map exact.
RescaleResult rescaled_snapshot(const GroundState& gs, const Field& f);

/// Quadrature of |f|^2 over nodes within `radius` of `center` (periodic
/// minimum-image distance on Cartesian grids; radial fields need the origin).
double windowed_mass(const Field& f, std::span<const double> center, double radius);

struct BestCenter {
    std::size_t index = 0;
    std::vector<int> coords;
    std::vector<double> point;
    double windowed_mass = 0.0;
};

/// Lattice node maximising the ball-window mass; sums within 1e-12 relative of
/// the maximum count as ties and the smallest lexicographic index wins.
BestCenter best_center(const Field& f, double radius);

ConcentrationCurve concentration_curve(const EvolutionTrace& trace, const GroundState& gs, const WindowSpec& spec);

} // namespace hnls
