#ifndef BESSBID_RNG_HPP
#define BESSBID_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace bessbid {

// Deterministic random helpers on top of mt19937_64.
//
// std::normal_distribution / generate_canonical are implementation-defined,
// so runs would not be reproducible across standard libraries. These helpers
// fix the bit-level mapping from engine output to samples.

/// Uniform double in [0, 1) using the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

/// Standard normal via Box-Muller. Consumes exactly two engine draws;
/// the second output of the pair is discarded so state stays trivial.
inline double gauss(std::mt19937_64& eng) {
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline double gauss(std::mt19937_64& eng, double mean, double stddev) {
    return mean + stddev * gauss(eng);
}

}  // namespace bessbid

#endif  // BESSBID_RNG_HPP
