#include "hnls/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace hnls::fft {

namespace {

std::mutex planner_mutex;

void execute(std::span<std::complex<double>> data, const kernels::Lattice& lat, int sign) {
    std::vector<int> n(static_cast<std::size_t>(lat.dim), lat.points);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft(lat.dim, n.data(), buf, buf, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
}

} // namespace

void forward(std::span<std::complex<double>> data, const kernels::Lattice& lat) {
    execute(data, lat, FFTW_FORWARD);
}

void backward(std::span<std::complex<double>> data, const kernels::Lattice& lat) {
    execute(data, lat, FFTW_BACKWARD);
}

} // namespace hnls::fft
