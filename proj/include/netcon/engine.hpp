#pragma once

// Random-scheduler simulation of the network-constructor model.
//
// A population of n anonymous agents, each holding a protocol state, plus an
// undirected edge set. Every step the scheduler draws an ordered
// (initiator, responder) pair uniformly from the n(n-1) ordered pairs and
// the transition delta rewrites both states and the pair's edge flag.
// Deltas only ever see (state, state, flag); agent ids stay on the
// observer side.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "netcon/rng.hpp"

namespace netcon {

using AgentId = std::uint32_t;

/// Exact non-negative fraction, always stored reduced.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::uint64_t numerator, std::uint64_t denominator) : num(numerator), den(denominator) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        const std::uint64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
    }

    constexpr double to_double() const noexcept {
        return static_cast<double>(num) / static_cast<double>(den);
    }

    friend constexpr bool operator==(const Rational&, const Rational&) = default;
};

/// interactions / n, exactly.
constexpr Rational parallel_time(std::uint64_t interactions, std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("parallel_time: n must be >= 1");
    return Rational(interactions, n);
}

/// Symmetric, loop-free adjacency with per-agent neighbor lists.
///
/// Every protocol in this library keeps degree <= 3, which fits the inline
/// storage; larger degrees spill to the heap.
class EdgeSet {
public:
    EdgeSet() = default;
    explicit EdgeSet(std::size_t n) : adjacency_(n) {}

    std::size_t agent_count() const noexcept { return adjacency_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }

    std::span<const AgentId> neighbors(AgentId u) const {
        const auto& list = adjacency_.at(u);
        return {list.data(), list.size()};
    }

    std::size_t degree(AgentId u) const { return adjacency_.at(u).size(); }

    bool contains(AgentId u, AgentId v) const noexcept {
        const auto& a = adjacency_[u];
        const auto& b = adjacency_[v];
        const auto& shorter = a.size() <= b.size() ? a : b;
        const AgentId other = a.size() <= b.size() ? v : u;
        return std::find(shorter.begin(), shorter.end(), other) != shorter.end();
    }

    /// Inserts or removes the edge {u, v}; a no-op when already in that state.
    void set(AgentId u, AgentId v, bool present) {
        if (u == v) throw std::invalid_argument("EdgeSet: self-loops are not allowed");
        if (u >= adjacency_.size() || v >= adjacency_.size()) throw std::out_of_range("EdgeSet: agent id out of range");
        if (contains(u, v) == present) return;
        if (present) {
            adjacency_[u].push_back(v);
            adjacency_[v].push_back(u);
            ++edge_count_;
        } else {
            erase_one(adjacency_[u], v);
            erase_one(adjacency_[v], u);
            --edge_count_;
        }
    }

    void clear() {
        for (auto& list : adjacency_) list.clear();
        edge_count_ = 0;
    }

    /// Edge list with u < v, sorted, for observers and tests.
    std::vector<std::pair<AgentId, AgentId>> edges() const {
        std::vector<std::pair<AgentId, AgentId>> out;
        out.reserve(edge_count_);
        for (AgentId u = 0; u < adjacency_.size(); ++u)
            for (AgentId v : adjacency_[u])
                if (u < v) out.emplace_back(u, v);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Checks symmetry and loop-freeness.
    bool is_consistent() const {
        std::size_t half_edges = 0;
        for (AgentId u = 0; u < adjacency_.size(); ++u) {
            for (AgentId v : adjacency_[u]) {
                if (v == u || v >= adjacency_.size()) return false;
                const auto& back = adjacency_[v];
                if (std::count(back.begin(), back.end(), u) != 1) return false;
                if (std::count(adjacency_[u].begin(), adjacency_[u].end(), v) != 1) return false;
                ++half_edges;
            }
        }
        return half_edges == 2 * edge_count_;
    }

    friend bool operator==(const EdgeSet& a, const EdgeSet& b) { return a.edges() == b.edges(); }

private:
    using List = boost::container::small_vector<AgentId, 3>;

    static void erase_one(List& list, AgentId v) {
        auto it = std::find(list.begin(), list.end(), v);
        *it = list.back();
        list.pop_back();
    }

    std::vector<List> adjacency_;
    std::size_t edge_count_ = 0;
};

template <class State>
struct Configuration {
    std::vector<State> states;
    EdgeSet edges;
    std::uint64_t interactions = 0;

    std::size_t size() const noexcept { return states.size(); }
};

/// Image of a transition delta: new initiator state, new responder state,
/// new edge flag.
template <class State>
struct Transition {
    State initiator;
    State responder;
    bool edge;

    friend bool operator==(const Transition&, const Transition&) = default;
};

template <class Delta, class State>
concept TransitionDelta = requires(const Delta& delta, const State& a, const State& b, bool edge) {
    { delta(a, b, edge) } -> std::convertible_to<Transition<State>>;
};

template <class State>
struct InteractionRecord {
    AgentId initiator;
    AgentId responder;
    Transition<State> before;
    Transition<State> after;
    std::uint64_t index;  // 1-based ordinal of this interaction
};

enum class StopReason { predicate_satisfied, budget_exhausted };

inline const char* to_string(StopReason reason) noexcept {
    return reason == StopReason::predicate_satisfied ? "predicate-satisfied" : "budget-exhausted";
}

inline StopReason stop_reason_from_string(const std::string& text) {
    if (text == "predicate-satisfied") return StopReason::predicate_satisfied;
    if (text == "budget-exhausted") return StopReason::budget_exhausted;
    throw std::invalid_argument("unknown stop reason '" + text + "'");
}

/// Outcome of one simulation run.
struct TrialReport {
    std::string protocol;
    std::uint64_t n = 0;
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    std::uint64_t interactions = 0;
    Rational parallel_time;
    bool success = false;
    StopReason stop_reason = StopReason::budget_exhausted;
    std::map<std::string, std::string> summary;

    friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

/// Builds the initial configuration; `initial` is called once per agent in id order.
template <class Initial>
auto init_configuration(std::size_t n, Initial&& initial) {
    using State = std::decay_t<std::invoke_result_t<Initial&, AgentId>>;
    if (n < 2) throw std::invalid_argument("init_configuration: population needs at least 2 agents");
    Configuration<State> config;
    config.states.reserve(n);
    for (AgentId i = 0; i < n; ++i) config.states.push_back(initial(i));
    config.edges = EdgeSet(n);
    return config;
}

/// Uniform ordered pair of distinct agents: initiator uniform on [0, n),
/// responder uniform on the remaining n-1 ids by index shift.
inline std::pair<AgentId, AgentId> draw_pair(SchedulerRng& rng, std::size_t n) {
    if (n < 2) throw std::invalid_argument("draw_pair: population needs at least 2 agents");
    const auto initiator = static_cast<AgentId>(rng.uniform_below(n));
    auto responder = static_cast<AgentId>(rng.uniform_below(n - 1));
    if (responder >= initiator) ++responder;
    return {initiator, responder};
}

namespace detail {

/// One interaction without building a record; the hot path of unobserved runs.
template <class State, class Delta>
inline void step(Configuration<State>& config, AgentId i, AgentId r, const Delta& delta) {
    const bool edge = config.edges.contains(i, r);
    State* states = config.states.data();
    auto t = delta(states[i], states[r], edge);
    states[i] = std::move(t.initiator);
    states[r] = std::move(t.responder);
    if (t.edge != edge) config.edges.set(i, r, t.edge);
    ++config.interactions;
}

}  // namespace detail

template <class State, TransitionDelta<State> Delta>
InteractionRecord<State> apply_interaction(Configuration<State>& config, std::pair<AgentId, AgentId> pair,
                                           const Delta& delta) {
    const auto [i, r] = pair;
    const bool edge = config.edges.contains(i, r);
    InteractionRecord<State> record{i, r, {config.states[i], config.states[r], edge}, {}, 0};
    record.after = delta(record.before.initiator, record.before.responder, edge);
    config.states[i] = record.after.initiator;
    config.states[r] = record.after.responder;
    if (record.after.edge != edge) config.edges.set(i, r, record.after.edge);
    record.index = ++config.interactions;
    return record;
}

/// Placeholder observer; the engine skips the call entirely.
struct NoObserver {
    template <class Record, class Config>
    void operator()(const Record&, const Config&) const noexcept {}
};

/// A stop predicate that can also be evaluated from the pair that just
/// interacted. For predicates that can only become true through a change at
/// the interacting agents, this is exact and O(1) per step; the whole
/// configuration is then checked only once, before the first draw.
template <class Stop, class State>
concept LocalStop = requires(Stop& stop, const Configuration<State>& config, AgentId u) {
    { stop(config, u, u) } -> std::convertible_to<bool>;
};

struct RunOptions {
    /// Interactions between stop-predicate evaluations. With a stride > 1 the
    /// engine undoes the last window and replays it one step at a time, so
    /// the reported first-hold index equals the stride-1 result for any
    /// predicate that stays true once it holds within a window.
    std::uint64_t check_stride = 1;
    std::string protocol;
};

/// Runs until `stop(config)` holds or `budget` interactions were applied in
/// this call. The predicate is also checked once before the first draw.
///
/// An observer, when given, sees every interaction record together with the
/// updated configuration; observers require `check_stride == 1`.
template <class State, TransitionDelta<State> Delta, class Stop, class Observer = NoObserver>
TrialReport run(Configuration<State>& config, const Delta& delta, Stop&& stop, std::uint64_t budget,
                SchedulerRng& rng, const RunOptions& options = {}, Observer&& observer = {}) {
    constexpr bool observed = !std::is_same_v<std::decay_t<Observer>, NoObserver>;
    if (options.check_stride == 0) throw std::invalid_argument("run: check_stride must be positive");
    if (observed && options.check_stride != 1) throw std::invalid_argument("run: observers require check_stride == 1");

    const std::size_t n = config.size();
    TrialReport report;
    report.protocol = options.protocol;
    report.n = n;
    report.seed = rng.seed();

    // Drawing from a local copy keeps the generator state in registers; it
    // is written back on every exit.
    SchedulerRng gen = rng;
    auto finish = [&](bool success) {
        rng = gen;
        report.success = success;
        report.stop_reason = success ? StopReason::predicate_satisfied : StopReason::budget_exhausted;
        report.interactions = config.interactions;
        report.parallel_time = parallel_time(config.interactions, n);
        return report;
    };

    if (stop(std::as_const(config))) return finish(true);

    if (options.check_stride == 1) {
        for (std::uint64_t t = 0; t < budget; ++t) {
            if constexpr (observed) {
                const auto record = apply_interaction(config, draw_pair(gen, n), delta);
                observer(record, std::as_const(config));
                if constexpr (LocalStop<Stop, State>) {
                    if (stop(std::as_const(config), record.initiator, record.responder)) return finish(true);
                } else {
                    if (stop(std::as_const(config))) return finish(true);
                }
            } else if constexpr (LocalStop<Stop, State>) {
                const auto [i, r] = draw_pair(gen, n);
                detail::step(config, i, r, delta);
                if (stop(std::as_const(config), i, r)) return finish(true);
            } else {
                const auto [i, r] = draw_pair(gen, n);
                detail::step(config, i, r, delta);
                if (stop(std::as_const(config))) return finish(true);
            }
        }
        return finish(false);
    }

    struct Undo {
        AgentId initiator;
        AgentId responder;
        State initiator_state;
        State responder_state;
        bool edge;
    };
    std::vector<Undo> window;
    window.reserve(static_cast<std::size_t>(std::min(options.check_stride, budget)));

    std::uint64_t remaining = budget;
    while (remaining > 0) {
        const std::uint64_t width = std::min(options.check_stride, remaining);
        const SchedulerRng checkpoint = gen;
        window.clear();
        for (std::uint64_t t = 0; t < width; ++t) {
            const auto [i, r] = draw_pair(gen, n);
            window.push_back({i, r, config.states[i], config.states[r], config.edges.contains(i, r)});
            detail::step(config, i, r, delta);
        }
        remaining -= width;
        if (!stop(std::as_const(config))) continue;

        for (auto it = window.rbegin(); it != window.rend(); ++it) {
            config.states[it->initiator] = it->initiator_state;
            config.states[it->responder] = it->responder_state;
            config.edges.set(it->initiator, it->responder, it->edge);
        }
        config.interactions -= width;
        gen = checkpoint;
        for (std::uint64_t t = 0; t < width; ++t) {
            const auto [i, r] = draw_pair(gen, n);
            detail::step(config, i, r, delta);
            if (stop(std::as_const(config))) return finish(true);
        }
        return finish(true);  // unreachable for deterministic predicates
    }
    return finish(false);
}

}  // namespace netcon
