#pragma once

// Leader election confirmed by the matching clock, followed by spanning
// line formation, as one composed protocol.
//
// Layers, in order:
//   0 slow leader election, from the first interaction;
//   1 matching-based clock, owner of the edge flag until both agents of
//     the pair have exited at <end>;
//   2 confirmation flag: set on reaching <max>/<end>, then spread by
//     one-way epidemic;
//   3 leader-based clock: starts at <0> once the agent's matching clock
//     reached <max>/<end>; the leader is the agent still holding L;
//   4 line formation: starts once confirmed, with L taken from layer 0;
//     its rules fire only between two agents at <end>, and it owns the
//     edge flag of such pairs.

#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>

#include "netcon/protocols/compose.hpp"
#include "netcon/protocols/leader_clock.hpp"
#include "netcon/protocols/leader_election.hpp"
#include "netcon/protocols/line_formation.hpp"
#include "netcon/protocols/matching_clock.hpp"

namespace netcon {

using PipelineState = Fields<LeaderElectionState, MatchingClockState, bool, std::optional<LeaderClockState>,
                                 std::optional<LineState>>;

namespace pipeline_field {
inline constexpr std::size_t election = 0;
inline constexpr std::size_t clock = 1;
inline constexpr std::size_t confirmed = 2;
inline constexpr std::size_t leader_clock = 3;
inline constexpr std::size_t line = 4;
}  // namespace pipeline_field

inline PipelineState pipeline_initial_state() {
    return {LeaderElectionState::L, MatchingClockState::start(), false, std::nullopt, std::nullopt};
}

inline std::string to_string(const PipelineState& s) {
    const auto& lc = get<pipeline_field::leader_clock>(s);
    const auto& line = get<pipeline_field::line>(s);
    return "<" + to_string(get<pipeline_field::election>(s)) + "," + to_string(get<pipeline_field::clock>(s)) +
           "," + (get<pipeline_field::confirmed>(s) ? "c" : "-") + "," + (lc ? to_string(*lc) : "-") + "," +
           (line ? to_string(*line) : "-") + ">";
}

inline auto full_pipeline_delta(const ClockParams& params) {
    params.validate();
    namespace f = pipeline_field;
    using S = PipelineState;

    auto election = on_field<f::election>(LeaderElectionDelta{});
    auto clock = on_field<f::clock>(MatchingClockDelta{params});

    auto confirmation = make_layer<f::confirmed>([params](const S& a, const S& b, bool edge) {
        const bool ca = get<f::confirmed>(a) || at_max_or_end(get<f::clock>(a), params);
        const bool cb = get<f::confirmed>(b) || at_max_or_end(get<f::clock>(b), params);
        const bool any = ca || cb;
        return Transition<bool>{any, any, edge};
    });

    auto leader_clock = make_layer<f::leader_clock>([params](const S& a, const S& b, bool edge) {
        auto activate = [&](const S& s) {
            auto lc = get<f::leader_clock>(s);
            if (!lc && at_max_or_end(get<f::clock>(s), params))
                lc = get<f::election>(s) == LeaderElectionState::L ? LeaderClockState::make_leader()
                                                                         : LeaderClockState::follower(0);
            return lc;
        };
        auto la = activate(a);
        auto lb = activate(b);
        if (la && lb) {
            const auto [na, nb] = leader_clock_delta(*la, *lb, params);
            la = na;
            lb = nb;
        }
        return Transition<std::optional<LeaderClockState>>{la, lb, edge};
    });

    auto line = make_layer<f::line>([](const S& a, const S& b, bool edge) {
        auto activate = [](const S& s) {
            auto line_state = get<f::line>(s);
            if (!line_state && get<f::confirmed>(s))
                line_state = get<f::election>(s) == LeaderElectionState::L ? LineState::L : LineState::F;
            return line_state;
        };
        auto la = activate(a);
        auto lb = activate(b);
        if (la && lb && get<f::clock>(a).is_end() && get<f::clock>(b).is_end()) {
            const auto t = line_formation_delta(*la, *lb, edge);
            return Transition<std::optional<LineState>>{t.initiator, t.responder, t.edge};
        }
        return Transition<std::optional<LineState>>{la, lb, edge};
    });

    // Layer indices: 0 election, 1 clock, 2 confirmation, 3 leader clock, 4 line.
    auto owner = edge_owner_by([](const S& a, const S& b) -> std::size_t {
        return get<f::clock>(a).is_end() && get<f::clock>(b).is_end() ? 4 : 1;
    });

    return compose<S>(owner, election, clock, confirmation, leader_clock, line);
}

static_assert(std::is_trivially_copyable_v<PipelineState>);

using PipelineDelta = decltype(full_pipeline_delta(ClockParams{}));

/// Line-layer projection that treats a dormant layer as "not in the line".
struct PipelineLine {
    const std::optional<LineState>& operator()(const PipelineState& s) const noexcept {
        return get<pipeline_field::line>(s);
    }
};

struct PipelineElection {
    LeaderElectionState operator()(const PipelineState& s) const noexcept {
        return get<pipeline_field::election>(s);
    }
};

struct PipelineClock {
    const MatchingClockState& operator()(const PipelineState& s) const noexcept {
        return get<pipeline_field::clock>(s);
    }
};

}  // namespace netcon
