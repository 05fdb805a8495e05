#pragma once

// Seeded scheduler randomness.
//
// The generator is xoshiro256** (Blackman & Vigna) seeded through SplitMix64.
// Bounded integers use Lemire's multiply-shift with rejection, so the stream
// of draws is identical on every platform and standard library; the
// <random> distributions give no such guarantee.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace netcon {

namespace detail {
__extension__ typedef unsigned __int128 uint128;
}  // namespace detail

/// One SplitMix64 output step on a caller-owned state.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stateless SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    std::uint64_t s = x;
    return splitmix64_next(s);
}

/// Derives the seed of one independent stream from a master seed.
///
/// The mix is `h = master; for x in path: h = mix64(h ^ mix64(x))`, so the
/// seed of (master, n, trial) depends on nothing else in a sweep. Adding or
/// removing other trials never changes it.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = master;
    for (std::uint64_t x : path) h = mix64(h ^ mix64(x));
    return h;
}

/// xoshiro256** with the seed it was constructed from.
///
/// A plain value type: copying it snapshots the stream, which the engine uses
/// to replay a window of interactions.
class SchedulerRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr SchedulerRng(std::uint64_t seed = 0) noexcept : seed_(seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64_next(s);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr std::uint64_t seed() const noexcept { return seed_; }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). `bound` must be positive.
    constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        detail::uint128 m = static_cast<detail::uint128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<detail::uint128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    friend constexpr bool operator==(const SchedulerRng&, const SchedulerRng&) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace netcon
