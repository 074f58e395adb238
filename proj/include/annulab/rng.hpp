#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace annulab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for one replicate. Depends only on (master_seed, replicate),
/// so results do not depend on which worker runs the replicate.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t replicate) {
    return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(replicate + 0x632be59bd9b4e019ULL)));
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0,1).
inline double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential1(Rng& rng) {
    return -std::log(uniform_open(rng));
}

}  // namespace annulab
