#pragma once

#include <cstdint>
#include <string>

#include "netcon/engine.hpp"

namespace netcon {

/// Slow leader election: L is a candidate, F a follower.
enum class LeaderElectionState : std::uint8_t { L, F };

inline std::string to_string(LeaderElectionState s) { return s == LeaderElectionState::L ? "L" : "F"; }

/// L + L -> L + F. The edge flag is passed through untouched.
constexpr Transition<LeaderElectionState> leader_election_delta(LeaderElectionState a, LeaderElectionState b,
                                                                bool edge) noexcept {
    if (a == LeaderElectionState::L && b == LeaderElectionState::L) return {a, LeaderElectionState::F, edge};
    return {a, b, edge};
}

struct LeaderElectionDelta {
    constexpr Transition<LeaderElectionState> operator()(LeaderElectionState a, LeaderElectionState b,
                                                         bool edge) const noexcept {
        return leader_election_delta(a, b, edge);
    }
};

}  // namespace netcon
