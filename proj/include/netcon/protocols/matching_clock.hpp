#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "netcon/engine.hpp"

namespace netcon {

/// Level cap and slack of the phase clocks.
struct ClockParams {
    int max_level = 64;
    int d_slack = 8;

    void validate() const {
        if (max_level <= 0 || d_slack <= 0) throw std::invalid_argument("ClockParams: max and d must be positive");
        if (max_level <= d_slack + 2) throw std::invalid_argument("ClockParams: max must exceed d + 2");
        if (max_level > 0xFFFF) throw std::invalid_argument("ClockParams: max level too large");
    }

    friend bool operator==(const ClockParams&, const ClockParams&) = default;
};

/// <start>, <0> ... <max>, <end>.
struct MatchingClockState {
    enum class Phase : std::uint8_t { start, counting, end };

    Phase phase = Phase::start;
    std::uint16_t level = 0;

    static constexpr MatchingClockState start() noexcept { return {Phase::start, 0}; }
    static constexpr MatchingClockState at(int level) noexcept {
        return {Phase::counting, static_cast<std::uint16_t>(level)};
    }
    static constexpr MatchingClockState end() noexcept { return {Phase::end, 0}; }

    constexpr bool is_start() const noexcept { return phase == Phase::start; }
    constexpr bool is_counting() const noexcept { return phase == Phase::counting; }
    constexpr bool is_end() const noexcept { return phase == Phase::end; }

    friend constexpr bool operator==(const MatchingClockState&, const MatchingClockState&) = default;
};

inline std::string to_string(const MatchingClockState& s) {
    switch (s.phase) {
        case MatchingClockState::Phase::start: return "start";
        case MatchingClockState::Phase::end: return "end";
        default: return std::to_string(s.level);
    }
}

/// True once the agent has reached <max> or already exited at <end>.
constexpr bool at_max_or_end(const MatchingClockState& s, const ClockParams& params) noexcept {
    return s.is_end() || (s.is_counting() && s.level == params.max_level);
}

constexpr Transition<MatchingClockState> matching_clock_delta(const MatchingClockState& a,
                                                              const MatchingClockState& b, bool edge,
                                                              const ClockParams& params) noexcept {
    using S = MatchingClockState;
    const int top = params.max_level;

    // initialisation
    if (a.is_start() && b.is_start() && !edge) return {S::at(0), S::at(0), true};
    // odd population: a leftover <start> leaves with the first <end> it meets
    if (a.is_start() && b.is_end() && !edge) return {S::end(), S::end(), false};

    if (a.is_counting() && b.is_counting()) {
        const int i = a.level;
        const int j = b.level;
        if (edge) {
            if (i <= j && i < top) return {S::at(i + 1), S::at(i + 1), true};
            if (i == top && j == top) return {S::end(), S::end(), false};
        } else {
            if (i < j) return {a, S::at(i + 1), false};
            if (i == top) return {a, S::at(top), false};
        }
    }
    return {a, b, edge};
}

struct MatchingClockDelta {
    ClockParams params;

    constexpr Transition<MatchingClockState> operator()(const MatchingClockState& a, const MatchingClockState& b,
                                                        bool edge) const noexcept {
        return matching_clock_delta(a, b, edge, params);
    }
};

}  // namespace netcon
