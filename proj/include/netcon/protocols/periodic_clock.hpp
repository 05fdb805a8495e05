#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "netcon/engine.hpp"
#include "netcon/protocols/leader_clock.hpp"

namespace netcon {

/// Leader clock run in rounds of three stages. The end of a stage is
/// broadcast by one-way epidemic of a stage-start signal.
struct PeriodicClockState {
    static constexpr std::int8_t no_signal = -1;

    bool leader = false;
    std::uint8_t stage = 0;
    std::uint16_t level = 0;
    std::int8_t announce = no_signal;  // stage whose start this agent relays

    static constexpr PeriodicClockState make_leader() noexcept { return {true, 0, 0, no_signal}; }
    static constexpr PeriodicClockState follower() noexcept { return {false, 0, 0, no_signal}; }

    friend constexpr bool operator==(const PeriodicClockState&, const PeriodicClockState&) = default;
};

inline std::string to_string(const PeriodicClockState& s) {
    std::string out = s.leader ? "L" : std::to_string(s.level);
    out += "@" + std::to_string(s.stage);
    if (s.announce != PeriodicClockState::no_signal) out += "!" + std::to_string(s.announce);
    return out;
}

constexpr std::uint8_t next_stage(std::uint8_t stage) noexcept { return static_cast<std::uint8_t>((stage + 1) % 3); }

/// Both agents react to the pre-interaction state only:
///  - same stage: leader-clock counting on the levels;
///  - a leader meeting a same-stage follower at <max> closes the stage, moves
///    to the next one and starts relaying its signal;
///  - an agent seeing the signal for its next stage adopts it (level 0).
///    Signals for the current or previous stage are ignored, so a stale
///    signal is overwritten as soon as its carrier catches up.
constexpr std::pair<PeriodicClockState, PeriodicClockState> periodic_clock_delta(
    const PeriodicClockState& a, const PeriodicClockState& b, const ClockParams& params) noexcept {
    PeriodicClockState na = a;
    PeriodicClockState nb = b;

    if (a.stage == b.stage) {
        const auto [la, lb] = leader_clock_delta({a.leader, a.level}, {b.leader, b.level}, params);
        na.level = la.level;
        nb.level = lb.level;
    }

    auto closes_stage = [&](const PeriodicClockState& leader, const PeriodicClockState& other) {
        return leader.leader && !other.leader && other.stage == leader.stage && other.level == params.max_level;
    };
    if (closes_stage(a, b)) {
        na.stage = next_stage(a.stage);
        na.announce = static_cast<std::int8_t>(na.stage);
    } else if (closes_stage(b, a)) {
        nb.stage = next_stage(b.stage);
        nb.announce = static_cast<std::int8_t>(nb.stage);
    }

    auto receive = [](PeriodicClockState& receiver, const PeriodicClockState& before,
                      std::int8_t signal) {
        if (signal == PeriodicClockState::no_signal || signal != next_stage(before.stage)) return;
        if (receiver.stage != before.stage) return;  // already advanced in this interaction
        receiver.stage = static_cast<std::uint8_t>(signal);
        receiver.level = 0;
        receiver.announce = signal;
    };
    receive(na, a, b.announce);
    receive(nb, b, a.announce);
    return {na, nb};
}

struct PeriodicClockDelta {
    ClockParams params;

    constexpr Transition<PeriodicClockState> operator()(const PeriodicClockState& a, const PeriodicClockState& b,
                                                        bool edge) const noexcept {
        const auto [na, nb] = periodic_clock_delta(a, b, params);
        return {na, nb, edge};
    }
};

}  // namespace netcon
