#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gridfreq {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Draws an index with probability proportional to `weights`; zero weights are never drawn.
/// Returns weights.size() if all weights are zero.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

}  // namespace gridfreq
