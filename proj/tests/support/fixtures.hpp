#pragma once

// Handcrafted pipeline configurations past the clock phase, for the backup
// rules of line formation.

#include <numeric>
#include <vector>

#include "netcon/netcon.hpp"

namespace fixtures {

using namespace netcon;

/// Agent past the clock phase: clock at <end>, confirmed, leader clock on.
inline PipelineState settled_agent(bool leader, std::optional<LineState> line) {
    return {leader ? LeaderElectionState::L : LeaderElectionState::F, MatchingClockState::end(), true,
            leader ? LeaderClockState::make_leader() : LeaderClockState::follower(0), line};
}

inline std::vector<AgentId> shuffled_ids(std::size_t n, SchedulerRng& rng) {
    std::vector<AgentId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_below(i)]);
    return ids;
}

/// Two surviving leaders, everybody else free, no edges.
inline Configuration<PipelineState> two_leaders(std::size_t n, std::uint64_t seed) {
    SchedulerRng rng(seed);
    const auto ids = shuffled_ids(n, rng);
    auto config = init_configuration(n, [](AgentId) { return settled_agent(false, LineState::F); });
    for (int j = 0; j < 2; ++j) config.states[ids[j]] = settled_agent(true, LineState::L);
    return config;
}

/// Two disjoint partial lines H - R ... R - T, each of random length >= 2,
/// the rest free.
inline Configuration<PipelineState> two_partial_lines(std::size_t n, std::uint64_t seed) {
    SchedulerRng rng(seed);
    const auto ids = shuffled_ids(n, rng);
    auto config = init_configuration(n, [](AgentId) { return settled_agent(false, LineState::F); });
    std::size_t next = 0;
    for (int line = 0; line < 2; ++line) {
        const std::size_t length = 2 + rng.uniform_below(n / 4 - 1);
        for (std::size_t j = 0; j < length; ++j) {
            const AgentId u = ids[next + j];
            const LineState role = j == 0 ? LineState::T : (j + 1 == length ? LineState::H : LineState::R);
            config.states[u] = settled_agent(j == 1, role);  // the origin sits next to T
            if (j > 0) config.edges.set(ids[next + j - 1], u, true);
        }
        next += length;
    }
    return config;
}

}  // namespace fixtures
