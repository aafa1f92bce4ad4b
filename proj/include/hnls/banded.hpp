#pragma once

#include "hnls/errors.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace hnls {

/// Symmetric (not necessarily Hermitian) pentadiagonal matrix with an LU
/// factorisation without pivoting. Used for matrices whose Hermitian part is
/// positive definite, where elimination without pivoting is stable.
template <class T>
class Pentadiagonal {
public:
    /// diag[i] = A(i,i), off1[i] = A(i,i+1), off2[i] = A(i,i+2).
    Pentadiagonal(std::vector<T> diag, std::vector<T> off1, std::vector<T> off2)
        : n_(diag.size()), band_(diag.size()) {
        require(off1.size() + 1 >= n_ && off2.size() + 2 >= n_, ErrorKind::Structural,
                "pentadiagonal band lengths inconsistent");
        for (std::size_t i = 0; i < n_; ++i) {
            auto& row = band_[i];
            row = {T(0), T(0), diag[i], T(0), T(0)};
            if (i >= 2) row[0] = off2[i - 2];
            if (i >= 1) row[1] = off1[i - 1];
            if (i + 1 < n_) row[3] = off1[i];
            if (i + 2 < n_) row[4] = off2[i];
        }
        factor();
    }

    std::size_t size() const { return n_; }

    /// Overwrites rhs with A^{-1} rhs.
    void solve(std::span<T> rhs) const {
        require(rhs.size() == n_, ErrorKind::Structural, "rhs length mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            if (i >= 1) rhs[i] -= band_[i][1] * rhs[i - 1];
            if (i >= 2) rhs[i] -= band_[i][0] * rhs[i - 2];
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            T v = rhs[ii];
            if (ii + 1 < n_) v -= band_[ii][3] * rhs[ii + 1];
            if (ii + 2 < n_) v -= band_[ii][4] * rhs[ii + 2];
            rhs[ii] = v / band_[ii][2];
        }
    }

private:
    void factor() {
        // band_[i][j - i + 2] holds A(i, j); after factoring, the strict lower
        // part holds L multipliers and the rest U.
        for (std::size_t k = 0; k < n_; ++k) {
            const T pivot = band_[k][2];
            const double mag = std::norm(pivot);
            if (!(mag > 0.0) || !std::isfinite(mag))
                fail(ErrorKind::NonConvergence, "zero or non-finite pivot in banded solve");
            for (std::size_t i = k + 1; i <= k + 2 && i < n_; ++i) {
                const std::size_t col = k - i + 2; // position of A(i,k)
                const T l = band_[i][col] / pivot;
                band_[i][col] = l;
                for (std::size_t j = k + 1; j <= k + 2 && j < n_; ++j)
                    band_[i][j - i + 2] -= l * band_[k][j - k + 2];
            }
        }
    }

    std::size_t n_;
    std::vector<std::array<T, 5>> band_;
};

} // namespace hnls
