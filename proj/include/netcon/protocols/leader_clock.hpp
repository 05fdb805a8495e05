#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "netcon/engine.hpp"
#include "netcon/protocols/matching_clock.hpp"

namespace netcon {

/// Edge-less clock: followers count levels, the leader only drives them.
struct LeaderClockState {
    bool leader = false;
    std::uint16_t level = 0;

    static constexpr LeaderClockState make_leader() noexcept { return {true, 0}; }
    static constexpr LeaderClockState follower(int level) noexcept {
        return {false, static_cast<std::uint16_t>(level)};
    }

    friend constexpr bool operator==(const LeaderClockState&, const LeaderClockState&) = default;
};

inline std::string to_string(const LeaderClockState& s) { return s.leader ? "L" : std::to_string(s.level); }

/// <i> + L -> <i+1> + L for i < max;  <i> + <j> -> <i> + <i+1> for i < j.
constexpr std::pair<LeaderClockState, LeaderClockState> leader_clock_delta(const LeaderClockState& a,
                                                                           const LeaderClockState& b,
                                                                           const ClockParams& params) noexcept {
    if (!a.leader && b.leader && a.level < params.max_level) return {LeaderClockState::follower(a.level + 1), b};
    if (!a.leader && !b.leader && a.level < b.level) return {a, LeaderClockState::follower(a.level + 1)};
    return {a, b};
}

struct LeaderClockDelta {
    ClockParams params;

    constexpr Transition<LeaderClockState> operator()(const LeaderClockState& a, const LeaderClockState& b,
                                                      bool edge) const noexcept {
        const auto [na, nb] = leader_clock_delta(a, b, params);
        return {na, nb, edge};
    }
};

}  // namespace netcon
