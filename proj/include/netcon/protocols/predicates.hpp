#pragma once

// Omniscient observer predicates. They read agent ids and the edge set,
// which no delta can.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "netcon/engine.hpp"
#include "netcon/protocols/leader_clock.hpp"
#include "netcon/protocols/leader_election.hpp"
#include "netcon/protocols/line_formation.hpp"
#include "netcon/protocols/matching_clock.hpp"

namespace netcon {

struct Identity {
    template <class T>
    constexpr const T& operator()(const T& x) const noexcept { return x; }
};

template <class State, class Proj = Identity>
std::size_t count_leaders(const Configuration<State>& config, Proj proj = {}) {
    return static_cast<std::size_t>(std::count_if(config.states.begin(), config.states.end(), [&](const State& s) {
        return proj(s) == LeaderElectionState::L;
    }));
}

template <class State, class Proj = Identity>
bool is_single_leader(const Configuration<State>& config, Proj proj = {}) {
    return count_leaders(config, proj) == 1;
}

namespace detail {

inline std::optional<LineState> as_line(LineState s) { return s; }
inline std::optional<LineState> as_line(const std::optional<LineState>& s) { return s; }

}  // namespace detail

/// The edges form one simple path through all agents, H and T at its two
/// ends and R everywhere inside. `proj` yields a LineState or an optional one.
template <class State, class Proj = Identity>
bool is_spanning_line(const Configuration<State>& config, Proj proj = {}) {
    const std::size_t n = config.size();
    if (n < 2 || config.edges.edge_count() != n - 1) return false;

    std::optional<AgentId> head;
    for (AgentId u = 0; u < n; ++u) {
        const auto s = detail::as_line(proj(config.states[u]));
        if (!s) return false;
        if (*s == LineState::H) {
            if (head) return false;
            head = u;
        } else if (*s != LineState::T && *s != LineState::R) {
            return false;
        }
    }
    if (!head || config.edges.degree(*head) != 1) return false;

    std::size_t visited = 1;
    AgentId previous = *head;
    AgentId current = config.edges.neighbors(*head)[0];
    for (;;) {
        ++visited;
        const auto state = *detail::as_line(proj(config.states[current]));
        const auto neighbors = config.edges.neighbors(current);
        if (state == LineState::T) return neighbors.size() == 1 && visited == n;
        if (state != LineState::R || neighbors.size() != 2 || visited >= n) return false;
        const AgentId next = neighbors[0] == previous ? neighbors[1] : neighbors[0];
        previous = current;
        current = next;
    }
}

template <class State, class Proj = Identity>
bool clock_max_reached(const Configuration<State>& config, const ClockParams& params, Proj proj = {}) {
    return std::any_of(config.states.begin(), config.states.end(),
                       [&](const State& s) { return at_max_or_end(proj(s), params); });
}

template <class State, class Proj = Identity>
bool leader_clock_max_reached(const Configuration<State>& config, const ClockParams& params, Proj proj = {}) {
    return std::any_of(config.states.begin(), config.states.end(), [&](const State& s) {
        const LeaderClockState& c = proj(s);
        return !c.leader && c.level == params.max_level;
    });
}

/// Agents with at least one incident edge.
template <class State>
std::size_t matched_agents(const Configuration<State>& config) {
    std::size_t count = 0;
    for (AgentId u = 0; u < config.size(); ++u) count += config.edges.degree(u) > 0 ? 1 : 0;
    return count;
}

}  // namespace netcon
