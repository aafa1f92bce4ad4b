#pragma once

#include "hnls/kernels.hpp"

#include <complex>
#include <span>
#include <vector>

namespace hnls::fft {

/// Unnormalised in-place DFT over a periodic lattice (FFTW, single-threaded so
/// results are reproducible).
void forward(std::span<std::complex<double>> data, const kernels::Lattice& lat);
/// Unnormalised inverse; forward followed by inverse multiplies by lat.size().
void backward(std::span<std::complex<double>> data, const kernels::Lattice& lat);

/// Signed integer wavenumber of DFT index k on M points.
inline int wavenumber(int k, int m) { return k <= m / 2 ? k : k - m; }

} // namespace hnls::fft
