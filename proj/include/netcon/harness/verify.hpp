#pragma once

// Direct checks of individual analytic statements.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netcon/bubblesort.hpp"
#include "netcon/engine.hpp"
#include "netcon/protocols/matching_clock.hpp"
#include "netcon/protocols/predicates.hpp"
#include "netcon/rng.hpp"

namespace netcon {

// ---------------------------------------------------------------------------
// At least n/2 agents sit on a matching edge after ceil(0.51 n) interactions.

struct Lemma2Result {
    std::size_t n = 0;
    std::uint64_t interactions = 0;  // per trial
    std::vector<std::size_t> matched;  // matched agents at the end of each trial
    std::size_t failures = 0;
    bool pass = false;
};

inline std::uint64_t lemma2_interactions(std::size_t n) {
    return static_cast<std::uint64_t>(std::ceil(0.51 * static_cast<double>(n)));
}

/// `delta` defaults to the matching clock; tests pass a broken one as a
/// negative control. Trial t uses derive_seed(seed, {n, t}).
template <class Delta = MatchingClockDelta>
Lemma2Result verify_lemma2(std::size_t n, std::size_t trials, std::uint64_t seed, const Delta& delta = Delta{}) {
    if (n < 64 || n % 2 != 0) throw std::invalid_argument("verify_lemma2: n must be even and >= 64");
    if (trials < 1) throw std::invalid_argument("verify_lemma2: trials must be >= 1");
    Lemma2Result result;
    result.n = n;
    result.interactions = lemma2_interactions(n);
    for (std::size_t t = 0; t < trials; ++t) {
        auto config = init_configuration(n, [](AgentId) { return MatchingClockState::start(); });
        SchedulerRng rng(derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t)}));
        run(config, delta, [](const auto&) { return false; }, result.interactions, rng);
        const std::size_t m = matched_agents(config);
        result.matched.push_back(m);
        if (2 * m < n) ++result.failures;
    }
    result.pass = result.failures == 0;
    return result;
}

// ---------------------------------------------------------------------------
// Exhaustive contraction of the bubble-sort potential.

struct ContractionResult {
    std::size_t max_n = 0;
    std::uint64_t configurations = 0;
    std::uint64_t violations = 0;
    bool pass = false;
    // Largest EP(C') / P(C) over unsorted configurations, and where it occurs.
    BigRational worst_ratio = 0;
    std::size_t worst_n = 0;
    std::uint64_t worst_mask = 0;
    std::optional<std::string> first_violation;
};

inline ContractionResult verify_potential_contraction(std::size_t max_n) {
    if (max_n < 2 || max_n > 16) throw std::invalid_argument("verify_potential_contraction: need 2 <= max_n <= 16");
    ContractionResult result;
    result.max_n = max_n;
    for (std::size_t n = 2; n <= max_n; ++n) {
        const BigRational factor = contraction_factor(n);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            ++result.configurations;
            const auto c = ZeroOneConfig::from_mask(n, mask);
            const BigInt p = potential(c);
            const BigRational ep = exact_expected_next_potential(c);
            const bool ok = ep <= factor * BigRational(p);
            if (!ok) {
                ++result.violations;
                if (!result.first_violation)
                    result.first_violation = "n=" + std::to_string(n) + " mask=" + std::to_string(mask) +
                                             " EP=" + ep.str() + " P=" + p.str();
            }
            if (p == 0) continue;  // sorted: 0 <= 0, no ratio
            const BigRational ratio = ep / BigRational(p);
            if (ratio > result.worst_ratio) {
                result.worst_ratio = ratio;
                result.worst_n = n;
                result.worst_mask = mask;
            }
        }
    }
    result.pass = result.violations == 0;
    return result;
}

// ---------------------------------------------------------------------------
// Scheduler uniformity.

struct PairFrequencies {
    std::size_t n = 0;
    std::uint64_t draws = 0;
    std::vector<std::uint64_t> counts;  // index initiator * n + responder
    double chi_square = 0;              // over the n(n-1) ordered pairs
    std::size_t degrees_of_freedom = 0;
};

inline PairFrequencies pair_frequencies(std::size_t n, std::uint64_t draws, std::uint64_t seed) {
    PairFrequencies f;
    f.n = n;
    f.draws = draws;
    f.counts.assign(n * n, 0);
    SchedulerRng rng(seed);
    for (std::uint64_t t = 0; t < draws; ++t) {
        const auto [i, r] = draw_pair(rng, n);
        ++f.counts[i * n + r];
    }
    const double expected = static_cast<double>(draws) / static_cast<double>(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < n; ++r) {
            if (i == r) continue;
            const double diff = static_cast<double>(f.counts[i * n + r]) - expected;
            f.chi_square += diff * diff / expected;
        }
    f.degrees_of_freedom = n * (n - 1) - 1;
    return f;
}

// ---------------------------------------------------------------------------
// Instrumented matching-clock run recording, for every matching edge, the
// first interaction along it after it formed. Informational only.

struct EdgeCollectorProfile {
    std::size_t n = 0;
    std::size_t edges = 0;
    std::vector<std::uint64_t> first_use;  // ascending interaction indices
    std::size_t tail_edges = 0;            // ceil(0.05 n)
    std::uint64_t tail_interactions = 0;   // span in which the last tail_edges were first used
    double tail_over_n_ln_n = 0;
};

inline EdgeCollectorProfile edge_collector_profile(std::size_t n, std::uint64_t seed,
                                                   const ClockParams& params = {}) {
    params.validate();
    auto config = init_configuration(n, [](AgentId) { return MatchingClockState::start(); });
    SchedulerRng rng(seed);
    std::vector<bool> used(n, false);
    std::vector<std::uint64_t> first_use;
    const std::size_t pairs = n / 2;
    auto observer = [&](const InteractionRecord<MatchingClockState>& r, const Configuration<MatchingClockState>&) {
        if (r.before.edge && !used[std::min(r.initiator, r.responder)]) {
            used[std::min(r.initiator, r.responder)] = true;
            first_use.push_back(r.index);
        }
    };
    auto stop = [&](const Configuration<MatchingClockState>&) { return first_use.size() == pairs; };
    RunOptions options;
    run(config, MatchingClockDelta{params}, stop, static_cast<std::uint64_t>(64.0 * n * n * std::log(n) + 1e6), rng,
        options, observer);

    EdgeCollectorProfile p;
    p.n = n;
    p.edges = first_use.size();
    p.first_use = first_use;
    p.tail_edges = std::min(p.edges, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n))));
    if (p.tail_edges > 0 && p.edges > p.tail_edges) {
        p.tail_interactions = first_use.back() - first_use[p.edges - p.tail_edges - 1];
        p.tail_over_n_ln_n =
            static_cast<double>(p.tail_interactions) / (static_cast<double>(n) * std::log(static_cast<double>(n)));
    }
    return p;
}

}  // namespace netcon
