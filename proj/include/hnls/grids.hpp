#pragma once

// Discretisations of R^d and the complex fields sampled on them.
//
// RadialGrid is uniform in s = ln r between r_min > 0 and r_max. Radial
// fields u(r) are handled internally through the reduced variable
// g(s) = r^{(d-2)/2} u(r), in which the singular operator -Δ - c/|x|^2 becomes
// -d²/ds² + (c* - c) and the radial measure becomes ds. Second derivatives
// use the 4th-order centred stencil with zero ghost values beyond both ends.
//
// CartesianGrid is a periodic lattice of M^d nodes on [-L, L)^d, offset by
// half a cell so that no node sits on the origin.

#include "hnls/kernels.hpp"

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hnls {

using cplx = std::complex<double>;

/// Best constant in Hardy's inequality, (d-2)^2 / 4.
double hardy_constant(int d);

/// Surface measure of the unit sphere S^{d-1}.
double sphere_measure(int d);

class RadialGrid {
public:
    /// r_min <= 0 selects a default that puts the truncated near-origin tail
    /// g ~ r^{sqrt(c*-c)} below 1e-7 in amplitude.
    static std::shared_ptr<const RadialGrid> make(int dimension, double coupling,
                                                  std::size_t nodes = 8192, double r_max = 50.0,
                                                  double r_min = 0.0);

    /// Same grid specified by its inner log-radius; exact round trip for checkpoints.
    static std::shared_ptr<const RadialGrid> make_log(int dimension, double coupling, std::size_t nodes,
                                                      double s_min, double r_max);

    static double default_r_min(int dimension, double coupling);

    int dimension() const { return d_; }
    double coupling() const { return c_; }
    double critical_coupling() const { return hardy_constant(d_); }
    /// sqrt(c* - c): decay rate of the reduced field towards s = -inf.
    double kappa() const;
    std::size_t size() const { return r_.size(); }
    double r_min() const { return r_.front(); }
    double r_max() const { return r_.back(); }
    double s_min() const { return s_min_; }
    double log_step() const { return ds_; }

    std::span<const double> radii() const { return r_; }
    /// w_i = sigma_d r_i^d ds, the quadrature weight of node i.
    std::span<const double> weights() const { return w_; }
    /// r_i^{(d-2)/2}, mapping u to the reduced variable g.
    std::span<const double> lift() const { return lift_; }

    double log_radius(std::size_t i) const { return s_min_ + ds_ * double(i); }

    /// (-d²/ds²) g with the 4th-order stencil, unscaled by sigma_d.
    void apply_neg_second_derivative(std::span<const cplx> g, std::span<cplx> out) const;
    cplx neg_second_derivative_at(std::span<const cplx> g, std::size_t i) const;

    /// Cubic Lagrange interpolation of a reduced field at log-radius s.
    /// Outside the grid the field is continued by zero.
    cplx interpolate_reduced(std::span<const cplx> g, double s) const;

    bool same_as(const RadialGrid& o) const;

private:
    RadialGrid() = default;
    int d_ = 3;
    double c_ = 0.0;
    double s_min_ = 0.0;
    double ds_ = 0.0;
    std::vector<double> r_, w_, lift_;
};

class CartesianGrid {
public:
    static std::shared_ptr<const CartesianGrid> make(int dimension, int points_per_axis,
                                                     double half_width, double coupling);

    int dimension() const { return lat_.dim; }
    int points_per_axis() const { return lat_.points; }
    double half_width() const { return L_; }
    double spacing() const { return h_; }
    double coupling() const { return c_; }
    double cell_volume() const;
    std::size_t size() const { return inv_r2_.size(); }
    const kernels::Lattice& lattice() const { return lat_; }

    /// Physical coordinate of lattice index k along an axis.
    double coordinate(int k) const { return -L_ + (double(k) + 0.5) * h_; }
    std::vector<double> position(std::size_t idx) const;
    std::size_t index_of(std::span<const int> coords) const;
    std::vector<int> coords_of(std::size_t idx) const;
    /// 1/|x|^2 at every node.
    std::span<const double> inverse_radius_sq() const { return inv_r2_; }

    bool same_as(const CartesianGrid& o) const;

private:
    CartesianGrid() = default;
    kernels::Lattice lat_;
    double L_ = 0.0, h_ = 0.0, c_ = 0.0;
    std::vector<double> inv_r2_;
};

using RadialGridPtr = std::shared_ptr<const RadialGrid>;
using CartesianGridPtr = std::shared_ptr<const CartesianGrid>;
using GridHandle = std::variant<RadialGridPtr, CartesianGridPtr>;

class Field {
public:
    Field(GridHandle grid, std::vector<cplx> values, bool post_blowup = false);

    static Field zeros(GridHandle grid);
    static Field sample_radial(RadialGridPtr grid, const std::function<cplx(double)>& f);
    static Field sample_cartesian(CartesianGridPtr grid,
                                  const std::function<cplx(std::span<const double>)>& f);
    /// Build a radial field from its reduced samples g_i = r_i^{(d-2)/2} u_i.
    static Field from_reduced(RadialGridPtr grid, std::span<const cplx> g);

    bool is_radial() const { return std::holds_alternative<RadialGridPtr>(grid_); }
    bool is_cartesian() const { return !is_radial(); }
    std::string tag() const { return is_radial() ? "radial" : "cartesian"; }
    const GridHandle& grid() const { return grid_; }
    const RadialGrid& radial_grid() const;
    const CartesianGrid& cartesian_grid() const;
    RadialGridPtr radial_grid_ptr() const;
    CartesianGridPtr cartesian_grid_ptr() const;
    int dimension() const;
    double coupling() const;

    std::size_t size() const { return values_.size(); }
    std::span<const cplx> values() const { return values_; }
    const cplx& operator[](std::size_t i) const { return values_[i]; }
    bool post_blowup() const { return post_blowup_; }

    /// Reduced samples g_i (radial fields only).
    std::vector<cplx> reduced() const;

    Field scaled(cplx factor) const;
    Field modulus() const;
    bool same_grid(const Field& o) const;

private:
    GridHandle grid_;
    std::vector<cplx> values_;
    bool post_blowup_ = false;
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);

// --- grid operations -------------------------------------------------------

/// Integral of the real part of f: sum w_i f_i (radial) or h^d sum f_i.
double quadrature(const Field& f);

/// Discrete ||grad f||^2.
double gradient_norm_sq(const Field& f);

/// Cartesian only: the same quadratic form evaluated through the Fourier
/// multipliers of the periodic 2nd-order Laplacian.
double gradient_norm_sq_spectral(const Field& f);

/// Integral of |f|^2 / |x|^2.
double potential_integral(const Field& f);

/// Periodic lattice shift, out(x) = f(x - shift * h).
Field translate(const Field& f, std::span<const int> shift);

/// Cartesian only: translation by an arbitrary vector through a Fourier phase.
Field translate_continuous(const Field& f, std::span<const double> shift);

struct RescaleResult {
    Field field;
    bool under_resolved = false;
};

/// x -> lambda^{d/2} f(lambda x).
RescaleResult rescale(const Field& f, double lambda);

/// Radial field value at arbitrary radius (cubic in ln r on the reduced field).
cplx radial_value(const Field& f, double r);

/// Multiply a radial field by a smooth cos^2 taper from 1 at r0 to 0 at r1.
Field taper_radial(const Field& f, double r0, double r1);

/// Sample a radial field onto a Cartesian lattice by radial interpolation.
Field radial_to_cartesian(const Field& f, CartesianGridPtr grid);

} // namespace hnls
