#pragma once

// Translation-only profile decomposition of bounded sequences of Cartesian
// fields:  v_n = sum_j V^j(. - x_n^j) + v_n^l,  with the defects of the mass
// and Hardy-functional splittings, the inverse-square cross term, and the
// lower bound on the mass of an extracted profile.
//
// Profiles are stored recentred: the centre of V^j sits on the reference node
// (M/2, ..., M/2), and V^j(. - x_n^j) is the lattice shift by x_n^j - ref.

#include "hnls/ground_state.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hnls {

using LatticePoint = std::vector<int>;

struct GroundTruth {
    Field profile;                       // recentred
    std::vector<LatticePoint> centers;   // node of the profile centre, per n
};

struct FieldSequence {
    std::vector<Field> entries;          // n = 1..N_seq stored at 0..N_seq-1
    std::vector<GroundTruth> truth;      // synthetic generators only
    std::optional<Field> noise;
};

/// amplitude * exp(-|x - center|^2 / (2 width^2)), periodised by minimum image.
Field gaussian_bubble(CartesianGridPtr grid, double amplitude, double width, std::span<const double> center);

/// Complex field with i.i.d. uniform real and imaginary parts scaled so that
/// its L^2 norm equals `l2_norm`. Deterministic for a given seed.
Field broadband_noise(CartesianGridPtr grid, double l2_norm, std::uint64_t seed);

/// Node at which a profile counts as centred: best_center with `probe_radius`.
LatticePoint profile_center(const Field& f, double probe_radius = 1.5);

/// Root-mean-square radius of |f|^2 about profile_center(f).
double rms_radius(const Field& f);

/// v_n = sum_j translate(profile_j, law_j[n]) + noise. Profiles are taken as
/// given (their own centre sits wherever it sits); law_j[n] are lattice shifts.
FieldSequence generate_synthetic(std::span<const Field> profiles,
                                 std::span<const std::vector<LatticePoint>> center_laws,
                                 const std::optional<Field>& noise, std::size_t n_seq);

struct ExtractOptions {
    double probe_radius = 1.5;     // ball radius for best_center
    double strong_fraction = 0.05; // other window maxima above this share of the peak bound a profile's cell
    double filter_start = 2.0 / 3.0; // mollifier acts on |k| above this fraction of Nyquist, per axis
};

struct Decomposition {
    std::vector<Field> profiles;                    // V^j, recentred
    std::vector<std::vector<LatticePoint>> centers; // [j][n]
    std::vector<Field> residuals;                   // v_n^l
    std::vector<Field> originals;                   // v_n
    LatticePoint reference;
    std::size_t ell = 0;
    bool truncated = false;
    std::vector<double> estimate_norms;             // H^1 norm of every estimate tried

    /// V^j(. - x_n^j).
    Field placed(std::size_t j, std::size_t n) const;
};

/// Greedy extraction; stops when the H^1 norm of the next estimate is below
/// eta_min, or after ell_max profiles (flagging truncation if the next one
/// would still have been accepted).
Decomposition extract_profiles(const FieldSequence& seq, std::size_t ell_max, double eta_min,
                               const ExtractOptions& opts = {});

/// 1e-2 * max_n h1_norm(v_n).
double default_eta_min(const FieldSequence& seq);

/// max over n, nodes of |v_n - sum_j V^j(. - x_n^j) - v_n^l|, evaluated in the
/// order used to build the residual (zero means bit-exact reconstruction).
double reconstruction_defect(const Decomposition& dec);

struct DefectRow {
    std::size_t n = 0;              // 1-based
    double min_separation = 0.0;    // physical, minimum image; 0 if fewer than two profiles
    double pythagorean_defect = 0.0;
    double hardy_defect = 0.0;
    double residual_lp = 0.0;
    double mass = 0.0;              // mass(v_n), for relative comparisons
};

struct DefectReport {
    double p = 0.0;
    std::vector<DefectRow> rows;
};

DefectReport defect_report(const Decomposition& dec, double p);

/// Real part of the quadrature of V(x - shift) conj(w(x)) / |x|^2.
double cross_term(const Field& V, const Field& w, std::span<const int> shift);
double cross_term_continuous(const Field& V, const Field& w, std::span<const double> shift);

/// (1/R^2) * quadrature(|V(. - shift)| |w|).
double cross_term_bound(const Field& V, const Field& w, std::span<const int> shift, double R);

struct Lemma22Result {
    double m = 0.0;        // max over the final half of ||v_n||_{4/d+2}
    double M = 0.0;        // max over the final half of H(v_n)
    double bound = 0.0;    // (d/(d+2))^{d/4} m^{d/2+1} M^{-d/4} ||Q||
    double profile_norm = 0.0; // ||V|| of the largest-mass extracted profile
    double q_norm = 0.0;
    double tolerance = 0.05;
    bool pass = false;
    bool truncated = false;
    double gn_sum = 0.0;   // sum_j ||V^j||_{4/d+2}^{4/d+2}
    double gn_cap = 0.0;   // C_d max_j ||V^j||^{4/d} M
    Decomposition decomposition;
};

Lemma22Result lemma22_harness(const FieldSequence& seq, const GroundState& gs, std::size_t ell_max = 4,
                              double tolerance = 0.05, const ExtractOptions& opts = {});

} // namespace hnls
