#pragma once

#include <cstdint>
#include <random>

namespace isac {

/// Finalizer-style mixer for deriving independent stream seeds (restart,
/// sweep-point) from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0,1) with an explicit bit mapping, so streams are
/// reproducible independent of the standard library's distribution internals.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace isac
