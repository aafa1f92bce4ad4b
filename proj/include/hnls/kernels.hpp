#pragma once

// Data-parallel kernels shared by every module.
//
// Each kernel exists twice: `serial::` is the single-threaded reference kept
// for testing and benchmarking, `omp::` is the OpenMP version used by the
// library. Reductions accumulate in 128-bit fixed point, so the result is
// independent of summation order, thread count, and any permutation of the
// terms. The two variants therefore agree bit for bit.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hnls::kernels {

using cplx = std::complex<double>;

namespace detail {

inline int fixed_point_scale(double max_abs, std::size_t n) {
    const int headroom = static_cast<int>(std::bit_width(n)) + 2;
    return (125 - headroom) - std::ilogb(max_abs);
}

// Terms are scaled by 2^scale and truncated towards zero; the truncation is
// deterministic, so the sum still does not depend on order.
struct FixedScale {
    int scale = 0;
    double mult = 1.0; // 2^scale when representable
    bool direct = true;

    explicit FixedScale(int s) : scale(s), direct(s > -1000 && s < 1000) {
        if (direct) mult = std::ldexp(1.0, s);
    }
    __int128 operator()(double x) const {
        return static_cast<__int128>(direct ? x * mult : std::ldexp(x, scale));
    }
};

inline double from_fixed(__int128 acc, int scale) {
    return std::ldexp(static_cast<double>(acc), -scale);
}

constexpr std::size_t kBlock = 4096;

} // namespace detail

/// n^e for n >= 0, with cheap paths for the exponents of the d = 3 and d = 4
/// nonlinearities.
inline double nonneg_pow(double n, double e) {
    if (n == 0.0) return 0.0;
    if (e == 1.0) return n;
    if (e == 0.5) return std::sqrt(n);
    if (e == 1.5) return n * std::sqrt(n);
    if (e == 2.0 / 3.0) {
        const double c = std::cbrt(n);
        return c * c;
    }
    if (e == 5.0 / 3.0) {
        const double c = std::cbrt(n);
        return n * c * c;
    }
    return std::pow(n, e);
}

/// Periodic lattice of `points` nodes per axis in `dim` dimensions, row-major
/// with the last axis fastest.
struct Lattice {
    int dim = 3;
    int points = 0;

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
        return s;
    }
    std::size_t stride(int axis) const {
        std::size_t s = 1;
        for (int a = axis + 1; a < dim; ++a) s *= static_cast<std::size_t>(points);
        return s;
    }
    int coord(std::size_t idx, int axis) const {
        return static_cast<int>((idx / stride(axis)) % static_cast<std::size_t>(points));
    }
    // Neighbour of idx shifted by `delta` along `axis`, wrapping periodically.
    std::size_t shifted(std::size_t idx, int axis, int delta) const {
        const std::size_t st = stride(axis);
        const int c = coord(idx, axis);
        int nc = (c + delta) % points;
        if (nc < 0) nc += points;
        return idx + (static_cast<std::ptrdiff_t>(nc) - c) * static_cast<std::ptrdiff_t>(st);
    }
};

namespace detail {

// Per-axis index contributions of every offset, so a window sum needs one
// add per offset and axis instead of repeated wrap arithmetic.
struct OffsetTable {
    int dim = 0, points = 0;
    std::size_t count = 0;
    std::vector<std::size_t> contrib; // [offset][axis][coord]

    OffsetTable(const Lattice& lat, std::span<const std::vector<int>> offsets)
        : dim(lat.dim), points(lat.points), count(offsets.size()),
          contrib(offsets.size() * std::size_t(lat.dim) * std::size_t(lat.points)) {
        for (std::size_t o = 0; o < count; ++o)
            for (int a = 0; a < dim; ++a)
                for (int c = 0; c < points; ++c) {
                    int nc = (c + offsets[o][std::size_t(a)]) % points;
                    if (nc < 0) nc += points;
                    contrib[(o * std::size_t(dim) + std::size_t(a)) * std::size_t(points) + std::size_t(c)] =
                        std::size_t(nc) * lat.stride(a);
                }
    }

    double sum(std::span<const double> density, const Lattice& lat, std::size_t i) const {
        int coords[8];
        for (int a = 0; a < dim; ++a) coords[a] = lat.coord(i, a);
        double s = 0.0;
        for (std::size_t o = 0; o < count; ++o) {
            const std::size_t* row = &contrib[o * std::size_t(dim) * std::size_t(points)];
            std::size_t j = 0;
            for (int a = 0; a < dim; ++a) j += row[std::size_t(a) * std::size_t(points) + std::size_t(coords[a])];
            s += density[j];
        }
        return s;
    }
};

} // namespace detail

namespace serial {

template <class Term>
double exact_sum(std::size_t n, Term&& term) {
    std::vector<double> x(n);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = term(i);
        if (!std::isfinite(x[i])) return std::numeric_limits<double>::quiet_NaN();
        max_abs = std::max(max_abs, std::abs(x[i]));
    }
    if (max_abs == 0.0) return 0.0;
    const detail::FixedScale fx(detail::fixed_point_scale(max_abs, n));
    __int128 acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += fx(x[i]);
    return detail::from_fixed(acc, fx.scale);
}

/// Plain left-to-right double summation; only used to cross-check exact_sum.
template <class Term>
double naive_sum(std::size_t n, Term&& term) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += term(i);
    return s;
}

/// Sum over nodes and axes of |f(i + e_a) - f(i)|^2 on a periodic lattice.
inline double lattice_difference_energy(std::span<const cplx> f, const Lattice& lat) {
    return exact_sum(f.size(), [&](std::size_t i) {
        double e = 0.0;
        for (int a = 0; a < lat.dim; ++a) e += std::norm(f[lat.shifted(i, a, 1)] - f[i]);
        return e;
    });
}

/// out[i] = sum over `offsets` of density[i + offset] (periodic), summed in
/// the fixed order of `offsets`.
inline std::vector<double> window_sums(std::span<const double> density, const Lattice& lat,
                                       std::span<const std::vector<int>> offsets) {
    std::vector<double> out(density.size(), 0.0);
    const detail::OffsetTable tab(lat, offsets);
    for (std::size_t i = 0; i < density.size(); ++i) out[i] = tab.sum(density, lat, i);
    return out;
}

} // namespace serial

namespace omp {

template <class Term>
double exact_sum(std::size_t n, Term&& term) {
    const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
    std::vector<double> x(n);
    std::vector<double> block_max(nblocks, 0.0);
    std::vector<unsigned char> block_bad(nblocks, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = b * detail::kBlock, hi = std::min(n, lo + detail::kBlock);
        double m = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            x[i] = term(i);
            if (!std::isfinite(x[i])) block_bad[b] = 1;
            m = std::max(m, std::abs(x[i]));
        }
        block_max[b] = m;
    }
    double max_abs = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
        if (block_bad[b]) return std::numeric_limits<double>::quiet_NaN();
        max_abs = std::max(max_abs, block_max[b]);
    }
    if (max_abs == 0.0) return 0.0;
    const detail::FixedScale fx(detail::fixed_point_scale(max_abs, n));
    std::vector<__int128> partial(nblocks, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = b * detail::kBlock, hi = std::min(n, lo + detail::kBlock);
        __int128 acc = 0;
        for (std::size_t i = lo; i < hi; ++i) acc += fx(x[i]);
        partial[b] = acc;
    }
    __int128 acc = 0;
    for (auto p : partial) acc += p;
    return detail::from_fixed(acc, fx.scale);
}

inline double lattice_difference_energy(std::span<const cplx> f, const Lattice& lat) {
    return exact_sum(f.size(), [&](std::size_t i) {
        double e = 0.0;
        for (int a = 0; a < lat.dim; ++a) e += std::norm(f[lat.shifted(i, a, 1)] - f[i]);
        return e;
    });
}

inline std::vector<double> window_sums(std::span<const double> density, const Lattice& lat,
                                       std::span<const std::vector<int>> offsets) {
    std::vector<double> out(density.size(), 0.0);
    const auto n = static_cast<std::ptrdiff_t>(density.size());
    const detail::OffsetTable tab(lat, offsets);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        out[i] = tab.sum(density, lat, i);
    }
    return out;
}

} // namespace omp

/// Lattice offsets (in cells) of every node within `radius_cells` of the
/// origin, in lexicographic order.
std::vector<std::vector<int>> ball_offsets(int dim, double radius_cells);

} // namespace hnls::kernels
