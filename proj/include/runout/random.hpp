#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace runout {

// Portable draws from mt19937_64. The std distributions are implementation
// defined, which would break cross-platform reproducibility.

/// Uniform in the open interval (0, 1) with 53 random bits.
inline double open_unit(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    constexpr auto max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[bounded(rng, i)]);
}

}  // namespace runout
