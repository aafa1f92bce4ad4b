#pragma once

// Shared fixtures for the unit tests. Ground states are cached per (d, c, N)
// because several files need the same one.

#include "hnls/ground_state.hpp"
#include "hnls/samplers.hpp"

#include <map>
#include <tuple>

namespace test {

inline const hnls::GroundState& ground_state(int d = 3, double c = 0.1, std::size_t nodes = 8192) {
    static std::map<std::tuple<int, double, std::size_t>, hnls::GroundState> cache;
    const auto key = std::make_tuple(d, c, nodes);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, hnls::solve_ground_state(d, c, hnls::RadialGrid::make(d, c, nodes))).first;
    return it->second;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

constexpr std::uint64_t kSeed = 20240611;

} // namespace test
