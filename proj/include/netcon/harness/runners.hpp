#pragma once

// One seeded trial of each named protocol, with its stop predicate,
// budget and final-configuration summary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include "netcon/bubblesort.hpp"
#include "netcon/engine.hpp"
#include "netcon/protocols/compose.hpp"
#include "netcon/protocols/leader_clock.hpp"
#include "netcon/protocols/leader_election.hpp"
#include "netcon/protocols/matching_clock.hpp"
#include "netcon/protocols/periodic_clock.hpp"
#include "netcon/protocols/pipeline.hpp"
#include "netcon/protocols/predicates.hpp"
#include "netcon/replication.hpp"
#include "netcon/rng.hpp"

namespace netcon {

/// Everything a trial needs besides (protocol, n, seed).
struct TrialSettings {
    ClockParams clock;
    double eta = 2.0;
    double budget_factor = 16.0;
    std::string bits;        // replication: strand to copy; empty means random bits of length k
    std::size_t k = 16;      // replication: length of the random strand
    std::size_t copies = 2;  // replication: strands wanted, original included
    std::string dist = "permutation";  // bubble-sort input
    double extension = 0.1;  // extra interactions after first hold, as a fraction of the run
    std::ostream* trace = nullptr;
    bool check_edges = false;  // verify edge symmetry and the degree bound after every step
};

inline std::string format_double(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.6f", x);
    return buffer;
}

inline const char* bool_text(bool b) { return b ? "true" : "false"; }

inline std::uint64_t scaled_budget(double bound, double factor) {
    if (!(factor > 0)) throw std::invalid_argument("budget factor must be positive");
    return static_cast<std::uint64_t>(std::ceil(bound * factor));
}

using ElectionClockState = Fields<LeaderElectionState, MatchingClockState>;

inline std::string to_string(const ElectionClockState& s) {
    return "<" + to_string(get<0>(s)) + "," + to_string(get<1>(s)) + ">";
}

inline auto election_with_clock_delta(const ClockParams& params) {
    params.validate();
    return compose<ElectionClockState>(1, on_field<0>(LeaderElectionDelta{}), on_field<1>(MatchingClockDelta{params}));
}

namespace detail {

template <class State>
void write_trace(std::ostream& out, const InteractionRecord<State>& r) {
    out << r.index << ',' << r.initiator << ',' << r.responder << ',' << to_string(r.before.initiator) << ','
        << to_string(r.before.responder) << ',' << r.before.edge << ',' << to_string(r.after.initiator) << ','
        << to_string(r.after.responder) << ',' << r.after.edge << '\n';
}

/// Edge checks for traced runs.
struct EdgeAudit {
    std::size_t degree_bound = 0;
    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    std::size_t max_degree = 0;

    template <class State>
    void operator()(const InteractionRecord<State>& r, const Configuration<State>& config) {
        ++checks;
        const std::size_t d = std::max(config.edges.degree(r.initiator), config.edges.degree(r.responder));
        max_degree = std::max(max_degree, d);
        if (d > degree_bound || !config.edges.is_consistent()) ++violations;
    }

    void summarize(TrialReport& report) const {
        report.summary["edge_checks"] = std::to_string(checks);
        report.summary["edge_violations"] = std::to_string(violations);
        report.summary["max_degree"] = std::to_string(max_degree);
    }
};

/// Runs with the cheapest engine mode compatible with the settings: an
/// observer only when tracing, auditing or when the protocol needs one.
template <class State, class Delta, class Stop, class Extra = NoObserver>
TrialReport execute(Configuration<State>& config, const Delta& delta, Stop& stop, std::uint64_t budget,
                    SchedulerRng& rng, const TrialSettings& settings, const std::string& name,
                    std::size_t degree_bound, std::uint64_t stride, Extra&& extra = {}) {
    constexpr bool has_extra = !std::is_same_v<std::decay_t<Extra>, NoObserver>;
    RunOptions options;
    options.protocol = name;
    if (settings.trace || settings.check_edges) {
        EdgeAudit audit{degree_bound};
        auto observer = [&](const InteractionRecord<State>& r, const Configuration<State>& c) {
            if (settings.trace) write_trace(*settings.trace, r);
            if (settings.check_edges) audit(r, c);
            if constexpr (has_extra) extra(r, c);
        };
        auto report = run(config, delta, stop, budget, rng, options, observer);
        if (settings.check_edges) audit.summarize(report);
        return report;
    }
    if constexpr (has_extra) {
        return run(config, delta, stop, budget, rng, options, extra);
    } else {
        options.check_stride = stride;
        return run(config, delta, stop, budget, rng, options);
    }
}

/// Continues a finished run by a fraction of its length with no stop
/// predicate. Returns the number of extra interactions.
template <class State, class Delta, class Observer = NoObserver>
std::uint64_t extend(Configuration<State>& config, const Delta& delta, SchedulerRng& rng, double fraction,
                     Observer&& observer = {}) {
    const auto extra = static_cast<std::uint64_t>(std::ceil(static_cast<double>(config.interactions) * fraction));
    auto never = [](const Configuration<State>&) { return false; };
    RunOptions options;
    run(config, delta, never, extra, rng, options, std::forward<Observer>(observer));
    return extra;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bounds, in interactions. The budget is budget_factor times the bound.

inline double leader_election_bound(std::size_t n) { return static_cast<double>(n - 1) * static_cast<double>(n - 1); }

/// 8 max n ln n parallel time.
inline double clock_bound(std::size_t n, const ClockParams& params) {
    const double nd = static_cast<double>(n);
    return 8.0 * params.max_level * nd * nd * std::log(nd);
}

inline double line_pipeline_bound(std::size_t n) {
    const double nd = static_cast<double>(n);
    return 32.0 * nd * nd * std::log(nd);
}

/// 16 * 2n(n-1)(3k ln 2 + 2 ln n) per copy generation; l copies need
/// ceil(log2 l) generations when every strand replicates.
inline double replication_bound(std::size_t n, std::size_t k, std::size_t copies) {
    const double nd = static_cast<double>(n);
    const double one = 16.0 * 2.0 * nd * (nd - 1) * (3.0 * static_cast<double>(k) * std::log(2.0) + 2.0 * std::log(nd));
    const double generations = copies <= 2 ? 1.0 : std::ceil(std::log2(static_cast<double>(copies)));
    return one * generations;
}

// ---------------------------------------------------------------------------

inline TrialReport run_leader_election(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    auto config = init_configuration(n, [](AgentId) { return LeaderElectionState::L; });
    SchedulerRng rng(seed);
    auto stop = [](const Configuration<LeaderElectionState>& c) { return is_single_leader(c); };
    auto report = detail::execute(config, LeaderElectionDelta{}, stop, scaled_budget(leader_election_bound(n), s.budget_factor),
                                  rng, s, "leader-election", 0, n);
    report.summary["leaders"] = std::to_string(count_leaders(config));
    if (report.success && s.extension > 0) {
        detail::extend(config, LeaderElectionDelta{}, rng, s.extension);
        report.summary["stable_after_extension"] = bool_text(is_single_leader(config));
    }
    return report;
}

/// The matching clock run alongside slow leader election, so every run also
/// reports whether the election had finished when the first agent hit <max>.
inline TrialReport run_matching_clock(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    const auto delta = election_with_clock_delta(s.clock);
    auto config = init_configuration(
        n, [](AgentId) { return ElectionClockState{LeaderElectionState::L, MatchingClockState::start()}; });
    SchedulerRng rng(seed);
    struct Stop {
        ClockParams params;
        bool operator()(const Configuration<ElectionClockState>& c) const {
            return clock_max_reached(c, params, [](const ElectionClockState& x) { return get<1>(x); });
        }
        bool operator()(const Configuration<ElectionClockState>& c, AgentId i, AgentId r) const {
            return at_max_or_end(get<1>(c.states[i]), params) || at_max_or_end(get<1>(c.states[r]), params);
        }
    } stop{s.clock};
    auto report = detail::execute(config, delta, stop, scaled_budget(clock_bound(n, s.clock), s.budget_factor), rng,
                                  s, "matching-clock", 1, 1);
    const auto leaders = count_leaders(config, [](const ElectionClockState& x) { return get<0>(x); });
    report.summary["leaders_at_max"] = std::to_string(leaders);
    report.summary["election_done"] = bool_text(leaders == 1);
    report.summary["matched_agents"] = std::to_string(matched_agents(config));
    return report;
}

inline TrialReport run_leader_clock(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    s.clock.validate();
    auto config = init_configuration(
        n, [](AgentId u) { return u == 0 ? LeaderClockState::make_leader() : LeaderClockState::follower(0); });
    SchedulerRng rng(seed);
    struct Stop {
        ClockParams params;
        bool operator()(const Configuration<LeaderClockState>& c) const { return leader_clock_max_reached(c, params); }
        bool operator()(const Configuration<LeaderClockState>& c, AgentId i, AgentId r) const {
            auto top = [&](const LeaderClockState& x) { return !x.leader && x.level == params.max_level; };
            return top(c.states[i]) || top(c.states[r]);
        }
    } stop{s.clock};
    return detail::execute(config, LeaderClockDelta{s.clock}, stop,
                           scaled_budget(clock_bound(n, s.clock), s.budget_factor), rng, s, "leader-clock", 0, 1);
}

/// One full round of the periodic clock: the leader closes three stages and
/// every agent is back in stage 0.
inline TrialReport run_periodic_clock(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    s.clock.validate();
    auto config = init_configuration(
        n, [](AgentId u) { return u == 0 ? PeriodicClockState::make_leader() : PeriodicClockState::follower(); });
    SchedulerRng rng(seed);

    struct Tracker {
        std::size_t per_stage[3] = {0, 0, 0};
        std::uint64_t closures = 0;
        std::uint64_t skew_events = 0;
        bool skewed = false;

        void operator()(const InteractionRecord<PeriodicClockState>& r, const Configuration<PeriodicClockState>&) {
            auto move = [&](const PeriodicClockState& before, const PeriodicClockState& after) {
                if (before.stage == after.stage) return;
                --per_stage[before.stage];
                ++per_stage[after.stage];
                if (after.leader) ++closures;
            };
            move(r.before.initiator, r.after.initiator);
            move(r.before.responder, r.after.responder);
            const bool all_three = per_stage[0] > 0 && per_stage[1] > 0 && per_stage[2] > 0;
            if (all_three && !skewed) ++skew_events;
            skewed = all_three;
        }
    } tracker;
    tracker.per_stage[0] = n;
    auto stop = [&](const Configuration<PeriodicClockState>&) {
        return tracker.closures >= 3 && tracker.per_stage[0] == config.size();
    };
    auto report = detail::execute(config, PeriodicClockDelta{s.clock}, stop,
                                  scaled_budget(3.0 * clock_bound(n, s.clock), s.budget_factor), rng, s,
                                  "periodic-clock", 0, 1, tracker);
    report.summary["stage_closures"] = std::to_string(tracker.closures);
    report.summary["stage_skew_events"] = std::to_string(tracker.skew_events);
    return report;
}

namespace detail {

/// Line-pipeline stop predicate; also remembers when the first head appeared.
struct LineStop {
    std::optional<std::uint64_t> line_start;

    bool operator()(const Configuration<PipelineState>& c) const { return is_spanning_line(c, PipelineLine{}); }

    bool operator()(const Configuration<PipelineState>& c, AgentId i, AgentId r) {
        if (!line_start) {
            const auto& a = get<pipeline_field::line>(c.states[i]);
            const auto& b = get<pipeline_field::line>(c.states[r]);
            if ((a && *a == LineState::H) || (b && *b == LineState::H)) line_start = c.interactions;
        }
        return c.edges.edge_count() + 1 == c.size() && is_spanning_line(c, PipelineLine{});
    }
};

/// Counts interactions that change a line field or an edge.
struct LineChangeCounter {
    std::uint64_t changes = 0;

    void operator()(const InteractionRecord<PipelineState>& r, const Configuration<PipelineState>&) {
        namespace f = pipeline_field;
        if (r.before.edge != r.after.edge || get<f::line>(r.before.initiator) != get<f::line>(r.after.initiator) ||
            get<f::line>(r.before.responder) != get<f::line>(r.after.responder))
            ++changes;
    }
};

inline void summarize_pipeline(TrialReport& report, const Configuration<PipelineState>& config, const LineStop& stop,
                               PipelineDelta const& delta, SchedulerRng& rng, const TrialSettings& s) {
    namespace f = pipeline_field;
    const std::size_t n = config.size();
    report.summary["leaders"] = std::to_string(count_leaders(config, PipelineElection{}));
    if (stop.line_start) {
        report.summary["line_start"] = std::to_string(*stop.line_start);
        if (report.success)
            report.summary["line_time"] =
                format_double(static_cast<double>(report.interactions - *stop.line_start) / static_cast<double>(n));
    }
    if (!report.success) return;

    // The agent next to T started the line: it was the leader that met the first F.
    bool origin = false;
    for (AgentId u = 0; u < n; ++u) {
        const auto& line = get<f::line>(config.states[u]);
        if (!line || *line != LineState::T) continue;
        const AgentId start = config.edges.neighbors(u)[0];
        const auto& lc = get<f::leader_clock>(config.states[start]);
        const std::size_t clock_leaders = static_cast<std::size_t>(
            std::count_if(config.states.begin(), config.states.end(), [](const PipelineState& x) {
                const auto& c = get<f::leader_clock>(x);
                return c && c->leader;
            }));
        origin = lc && lc->leader && clock_leaders == 1;
    }
    report.summary["leader_is_origin"] = bool_text(origin);

    if (s.extension > 0) {
        auto copy = config;
        LineChangeCounter counter;
        detail::extend(copy, delta, rng, s.extension, counter);
        report.summary["stable_after_extension"] =
            bool_text(counter.changes == 0 && is_spanning_line(copy, PipelineLine{}));
    }
}

}  // namespace detail

inline TrialReport run_line_pipeline_from(Configuration<PipelineState>& config, std::uint64_t seed,
                                          const TrialSettings& s, const std::string& name = "line-pipeline") {
    const auto delta = full_pipeline_delta(s.clock);
    SchedulerRng rng(seed);
    detail::LineStop stop;
    auto report = detail::execute(config, delta, stop, scaled_budget(line_pipeline_bound(config.size()), s.budget_factor),
                                  rng, s, name, 2, 1);
    detail::summarize_pipeline(report, config, stop, delta, rng, s);
    return report;
}

inline TrialReport run_line_pipeline(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    auto config = init_configuration(n, [](AgentId) { return pipeline_initial_state(); });
    return run_line_pipeline_from(config, seed, s);
}

// ---------------------------------------------------------------------------
// Replication

/// Observer-side bookkeeping of a replication run.
struct ReplicationTracker {
    std::string seed_bits;
    std::size_t target = 2;

    std::size_t settled_copies = 1;  // strands equal to the seed with construction finished
    std::size_t strict_neutral_at_completion = 0;
    std::size_t corrupt = 0;
    std::uint64_t releases = 0;  // bridge removals
    std::uint64_t unclean_releases = 0;
    std::optional<std::uint64_t> first_copy;
    bool done = false;

    void operator()(const InteractionRecord<ReplicationAgentState>& r,
                    const Configuration<ReplicationAgentState>& config) {
        const auto& bi = r.before.initiator;
        const auto& br = r.before.responder;
        const auto& ai = r.after.initiator;
        const auto& ar = r.after.responder;

        // Bridge removal: the tail bit left the source head, which must now
        // head a complete, neutral strand again.
        if (r.before.edge && !r.after.edge && bi.role == Role::head && br.role == Role::head) {
            ++releases;
            const AgentId source = bi.buffer.is(Buffer::Kind::bit_h) ? r.initiator : r.responder;
            const auto strand = extract_strand_from(config, source);
            if (!(strand.complete && strand.neutral && strand.bits == seed_bits)) ++unclean_releases;
        }

        // A fresh agent was crowned tail: some copy just got its last bit.
        auto crowned = [](const ReplicationAgentState& before, const ReplicationAgentState& after) {
            return before.is_unset() && after.role == Role::tail;
        };
        if (!crowned(bi, ai) && !crowned(br, ar)) return;

        const AgentId tail = crowned(bi, ai) ? r.initiator : r.responder;
        std::size_t settled = 0;
        std::size_t bad = 0;
        for (const auto& strand : extract_strands(config)) {
            if (!strand.complete) continue;
            if (strand.bits != seed_bits) {
                ++bad;
                continue;
            }
            if (strand.settled) ++settled;
            if (strand.agents.back() == tail && strand.neutral) ++strict_neutral_at_completion;
        }
        corrupt = std::max(corrupt, bad);
        settled_copies = settled;
        if (!first_copy) first_copy = config.interactions;
        if (settled_copies >= target) done = true;
    }

    void summarize(TrialReport& report) const {
        report.summary["copies"] = std::to_string(target);
        report.summary["settled_copies"] = std::to_string(settled_copies);
        report.summary["strict_neutral_at_completion"] = std::to_string(strict_neutral_at_completion);
        report.summary["corrupt_strands"] = std::to_string(corrupt);
        report.summary["bridge_releases"] = std::to_string(releases);
        report.summary["unclean_releases"] = std::to_string(unclean_releases);
        if (first_copy) report.summary["first_copy_interactions"] = std::to_string(*first_copy);
    }
};

/// Random k-bit strand for a trial; the bits come from the trial seed.
inline StrandSpec random_strand(std::size_t k, std::uint64_t seed) {
    SchedulerRng rng(derive_seed(seed, {0x5354524eULL}));
    std::vector<std::uint8_t> bits(k);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.uniform_below(2));
    return StrandSpec(std::move(bits));
}

/// Runs replication on a seeded configuration until `copies` strands equal
/// to the seed exist with construction finished, or the budget runs out.
inline TrialReport run_replication(Configuration<ReplicationAgentState>& config, const StrandSpec& spec,
                                   std::size_t copies, std::uint64_t budget, SchedulerRng& rng,
                                   const TrialSettings& s = {}) {
    if (copies < 1) throw std::invalid_argument("run_replication: copies must be >= 1");
    ReplicationTracker tracker;
    tracker.seed_bits = spec.str();
    tracker.target = copies;
    tracker.done = copies <= 1;
    auto stop = [&](const Configuration<ReplicationAgentState>&) { return tracker.done; };
    auto report = detail::execute(config, ReplicationDelta{}, stop, budget, rng, s, "replication", 3, 1, tracker);
    tracker.summarize(report);
    report.summary["k"] = std::to_string(spec.size());
    report.summary["bits"] = spec.str();
    const auto strands = extract_strands(config);
    report.summary["strands"] = std::to_string(strands.size());
    report.summary["incomplete_strands"] = std::to_string(
        std::count_if(strands.begin(), strands.end(), [](const ExtractedStrand& x) { return !x.complete; }));
    return report;
}

inline TrialReport run_replication_trial(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    const StrandSpec spec = s.bits.empty() ? random_strand(s.k, seed) : StrandSpec::parse(s.bits);
    auto config = init_configuration(n, [](AgentId) { return ReplicationAgentState::free_agent(); });
    seed_strand(config, spec);
    SchedulerRng rng(seed);
    const auto budget = scaled_budget(replication_bound(n, spec.size(), s.copies), s.budget_factor);
    auto report = run_replication(config, spec, s.copies, budget, rng, s);
    if (report.success && s.extension > 0) {
        auto copy = config;
        detail::extend(copy, ReplicationDelta{}, rng, s.extension);
        std::size_t settled = 0;
        for (const auto& strand : extract_strands(copy)) settled += strand.settled && strand.bits == spec.str();
        report.summary["stable_after_extension"] = bool_text(settled >= s.copies);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Bubble-sort, reported in the same shape: interactions are comparisons.

inline std::vector<std::int64_t> sort_input(std::size_t n, const std::string& dist, SchedulerRng& rng) {
    std::vector<std::int64_t> values(n);
    if (dist == "zeroone") {
        for (auto& v : values) v = static_cast<std::int64_t>(rng.uniform_below(2));
    } else if (dist == "uniform") {
        for (auto& v : values) v = static_cast<std::int64_t>(rng.uniform_below(n));
    } else if (dist == "permutation") {
        std::iota(values.begin(), values.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(values[i - 1], values[rng.uniform_below(i)]);
    } else {
        throw std::invalid_argument("unknown input distribution '" + dist + "' (zeroone|uniform|permutation)");
    }
    return values;
}

inline TrialReport run_bubble_sort(std::size_t n, std::uint64_t seed, const TrialSettings& s) {
    SchedulerRng input_rng(derive_seed(seed, {0x534f5254ULL}));
    auto values = sort_input(n, s.dist, input_rng);
    SchedulerRng rng(seed);
    const auto bound = comparison_bound(n, s.eta);
    const auto sort = prob_bubble_sort(values, rng, scaled_budget(static_cast<double>(bound), s.budget_factor), s.eta);
    TrialReport report;
    report.protocol = "bubble-sort";
    report.n = n;
    report.seed = seed;
    report.interactions = sort.comparisons;
    report.parallel_time = parallel_time(sort.comparisons, n);
    report.success = sort.sorted;
    report.stop_reason = sort.sorted ? StopReason::predicate_satisfied : StopReason::budget_exhausted;
    report.summary["dist"] = s.dist;
    report.summary["swaps"] = std::to_string(sort.swaps);
    report.summary["bound"] = std::to_string(sort.bound);
    report.summary["within_bound"] = bool_text(sort.within_bound);
    return report;
}

// ---------------------------------------------------------------------------
// Registry

struct ProtocolInfo {
    std::string name;
    std::string description;
    std::function<TrialReport(std::size_t, std::uint64_t, const TrialSettings&)> run;
};

inline const std::vector<ProtocolInfo>& protocol_registry() {
    static const std::vector<ProtocolInfo> registry = {
        {"leader-election", "slow leader election L+L -> L+F; stops at one L; bound (n-1)^2 interactions",
         run_leader_election},
        {"matching-clock",
         "matching-based phase clock run with leader election; stops when an agent reaches <max> or <end>; "
         "bound 8*max*n*ln n parallel time",
         run_matching_clock},
        {"leader-clock", "leader-based clock with one leader; stops when a follower reaches <max>; same bound",
         run_leader_clock},
        {"periodic-clock", "three-stage periodic leader clock; stops after one full round; bound 3x clock bound",
         run_periodic_clock},
        {"line-pipeline",
         "leader election + matching clock + confirmation + leader clock + line formation; stops at a spanning "
         "line; bound 32*n^2*ln n interactions",
         run_line_pipeline},
        {"replication",
         "strand self-replication R1-R12; stops at `copies` settled strands equal to the seed; bound "
         "16*2n(n-1)(3k ln 2 + 2 ln n) interactions per generation",
         run_replication_trial},
        {"bubble-sort", "probabilistic bubble-sort; interactions are comparisons; bound 4(n-1)(n ln 2 + eta ln n)",
         run_bubble_sort},
    };
    return registry;
}

inline const ProtocolInfo& find_protocol(const std::string& name) {
    for (const auto& p : protocol_registry())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : protocol_registry()) known += (known.empty() ? "" : ", ") + p.name;
    throw std::invalid_argument("unknown protocol '" + name + "' (known: " + known + ")");
}

inline TrialReport run_trial(const std::string& protocol, std::size_t n, std::uint64_t trial, std::uint64_t seed,
                             const TrialSettings& settings) {
    auto report = find_protocol(protocol).run(n, seed, settings);
    report.trial = trial;
    return report;
}

}  // namespace netcon
