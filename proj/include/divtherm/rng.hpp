#pragma once

#include <cstdint>
#include <random>

namespace divtherm {

using Engine = std::mt19937_64;

/// splitmix64 finaliser over (base, index). Derived streams for sweep points,
/// trajectories and repetitions all come from here.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

}  // namespace divtherm
