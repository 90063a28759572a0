/**
 * @file random.hpp
 * @brief Seeded random streams.
 *
 * Two flavours are used. Sequential streams (std::mt19937_64) drive process
 * noise and per-sensor measurement noise. Link draws use a counter-based
 * generator keyed by (seed, step, sender, receiver) so that one directed link's
 * outcome never depends on which other nodes happened to transmit.
 */

#ifndef VOI_RANDOM_HPP
#define VOI_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace voi {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with any number of integer keys into a new seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(base);
    for (const auto k : keys) {
        h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys = {}) {
    return Rng(derive_seed(base, keys));
}

/// Stateless keyed randomness: the same keys always give the same draw.
class KeyedRandom {
public:
    explicit KeyedRandom(std::uint64_t seed) : seed_(seed) {}

    /// Uniform in [0, 1).
    [[nodiscard]] double uniform(std::initializer_list<std::uint64_t> keys) const {
        return to_unit(derive_seed(seed_, keys));
    }

    /// Standard normal via Box-Muller on two keyed uniforms.
    [[nodiscard]] double normal(std::initializer_list<std::uint64_t> keys) const {
        const std::uint64_t h = derive_seed(seed_, keys);
        const double u1 = 1.0 - to_unit(splitmix64(h ^ 0x1ULL));  // (0, 1]
        const double u2 = to_unit(splitmix64(h ^ 0x2ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    static double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

    std::uint64_t seed_;
};

}  // namespace voi

#endif  // VOI_RANDOM_HPP
