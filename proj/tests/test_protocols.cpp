#include <cmath>
#include <optional>

#include <gtest/gtest.h>

#include "netcon/netcon.hpp"
#include "support/conformance.hpp"

using namespace netcon;

namespace {

using LE = LeaderElectionState;
using MC = MatchingClockState;
using LC = LeaderClockState;
using PC = PeriodicClockState;
using LS = LineState;

template <class State>
Configuration<State> path_of(std::vector<State> states, std::vector<std::pair<AgentId, AgentId>> edges) {
    auto config = init_configuration(states.size(), [&](AgentId u) { return states[u]; });
    for (auto [u, v] : edges) config.edges.set(u, v, true);
    return config;
}

}  // namespace

TEST(RuleBook, EveryQuotedRuleAndNonMatchingSample) {
    const auto result = rule_book::check_all_protocols(10000, 1);
    for (const auto& f : result.failures) ADD_FAILURE() << f;
    EXPECT_GT(result.rules_checked, 9000U);
    EXPECT_EQ(result.identities_checked, 5U * 10000U);
}

TEST(RuleBook, SmallMaxLevel) {
    // The rule tables must also hold when max is close to its lower limit.
    const ClockParams p{11, 8};
    rule_book::ConformanceResult out;
    rule_book::check_rules(out, "matching-clock", rule_book::matching_clock_rules(11), MatchingClockDelta{p}, false);
    rule_book::check_rules(out, "leader-clock", rule_book::leader_clock_rules(11), LeaderClockDelta{p}, false);
    for (const auto& f : out.failures) ADD_FAILURE() << f;
}

TEST(LeaderElection, Examples) {
    EXPECT_EQ(leader_election_delta(LE::L, LE::L, false), (Transition<LE>{LE::L, LE::F, false}));
    EXPECT_EQ(leader_election_delta(LE::L, LE::F, false), (Transition<LE>{LE::L, LE::F, false}));
    EXPECT_EQ(leader_election_delta(LE::L, LE::L, true), (Transition<LE>{LE::L, LE::F, true}));
}

TEST(LeaderElection, HundredAgentsEndWithOneLeaderAndNeverLoseIt) {
    auto c = init_configuration(100, [](AgentId) { return LE::L; });
    SchedulerRng rng(12);
    std::size_t leaders = 100;
    bool monotone = true;
    auto observer = [&](const auto&, const Configuration<LE>& cfg) {
        const auto now = count_leaders(cfg);
        monotone = monotone && now <= leaders && now >= 1;
        leaders = now;
    };
    const auto r = run(c, LeaderElectionDelta{}, [](const auto& cfg) { return is_single_leader(cfg); }, 10000000, rng,
                       RunOptions{}, observer);
    ASSERT_TRUE(r.success);
    EXPECT_TRUE(monotone);
    EXPECT_EQ(count_leaders(c), 1U);
    // Fixpoint: nothing left to eliminate.
    run(c, LeaderElectionDelta{}, [](const auto&) { return false; }, 100000, rng);
    EXPECT_EQ(count_leaders(c), 1U);
}

TEST(MatchingClock, Examples) {
    const MatchingClockDelta d{};
    const int max = d.params.max_level;
    EXPECT_EQ(d(MC::at(3), MC::at(5), true), (Transition<MC>{MC::at(4), MC::at(4), true}));
    EXPECT_EQ(d(MC::at(3), MC::at(5), false), (Transition<MC>{MC::at(3), MC::at(4), false}));
    EXPECT_EQ(d(MC::at(5), MC::at(3), false), (Transition<MC>{MC::at(5), MC::at(3), false}));
    EXPECT_EQ(d(MC::at(max), MC::at(2), false), (Transition<MC>{MC::at(max), MC::at(max), false}));
    EXPECT_EQ(d(MC::start(), MC::start(), false), (Transition<MC>{MC::at(0), MC::at(0), true}));
    EXPECT_EQ(d(MC::at(max), MC::at(max), true), (Transition<MC>{MC::end(), MC::end(), false}));
    EXPECT_EQ(d(MC::start(), MC::end(), false), (Transition<MC>{MC::end(), MC::end(), false}));
    // Partners out of step: the higher one waits for the lower.
    EXPECT_EQ(d(MC::at(5), MC::at(3), true), (Transition<MC>{MC::at(5), MC::at(3), true}));
}

TEST(ClockParams, Validation) {
    EXPECT_NO_THROW((ClockParams{64, 8}.validate()));
    EXPECT_NO_THROW((ClockParams{11, 8}.validate()));
    EXPECT_THROW((ClockParams{10, 8}.validate()), std::invalid_argument);
    EXPECT_THROW((ClockParams{64, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((ClockParams{0, 8}.validate()), std::invalid_argument);
}

TEST(MatchingClock, MatchingInvariantOnTracedRuns) {
    for (std::size_t n : {16U, 17U, 33U}) {
        auto c = init_configuration(n, [](AgentId) { return MC::start(); });
        SchedulerRng rng(n);
        const ClockParams params{16, 8};
        bool ok = true;
        auto observer = [&](const auto&, const Configuration<MC>& cfg) {
            std::size_t counting = 0;
            for (AgentId u = 0; u < cfg.size(); ++u) {
                const auto& s = cfg.states[u];
                const auto deg = cfg.edges.degree(u);
                if (deg > 1 || (!s.is_counting() && deg != 0)) ok = false;
                if (s.is_counting()) {
                    ++counting;
                    if (deg != 1) ok = false;
                }
            }
            if (counting % 2 != 0) ok = false;
        };
        // Run until every agent has left, to cover the odd-population rule too.
        auto all_end = [](const Configuration<MC>& cfg) {
            return std::all_of(cfg.states.begin(), cfg.states.end(), [](const MC& s) { return s.is_end(); });
        };
        const auto r = run(c, MatchingClockDelta{params}, all_end, 100000000, rng, RunOptions{}, observer);
        EXPECT_TRUE(r.success) << n;
        EXPECT_TRUE(ok) << n;
        EXPECT_EQ(c.edges.edge_count(), 0U);
    }
}

TEST(MatchingClock, FloorOfFirstArrivalAtMax) {
    // No agent reaches <max> before (max - d - 2) * 0.4 * n ln n parallel time.
    const ClockParams params;
    const std::size_t n = 64;
    const double floor = (params.max_level - params.d_slack - 2) * 0.4 * n * std::log(static_cast<double>(n));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto c = init_configuration(n, [](AgentId) { return MC::start(); });
        SchedulerRng rng(seed);
        const auto r = run(
            c, MatchingClockDelta{params}, [&](const auto& cfg) { return clock_max_reached(cfg, params); },
            1000000000, rng);
        ASSERT_TRUE(r.success);
        EXPECT_GT(r.parallel_time.to_double(), floor);
    }
}

TEST(LeaderClock, Examples) {
    const ClockParams p{10, 7};
    EXPECT_EQ(leader_clock_delta(LC::follower(4), LC::make_leader(), p), (std::pair{LC::follower(5), LC::make_leader()}));
    EXPECT_EQ(leader_clock_delta(LC::follower(2), LC::follower(7), p), (std::pair{LC::follower(2), LC::follower(3)}));
    EXPECT_EQ(leader_clock_delta(LC::follower(7), LC::follower(7), p), (std::pair{LC::follower(7), LC::follower(7)}));
    EXPECT_EQ(leader_clock_delta(LC::follower(10), LC::make_leader(), p),
              (std::pair{LC::follower(10), LC::make_leader()}));
    // Leader as initiator: the rules are written with the follower first.
    EXPECT_EQ(leader_clock_delta(LC::make_leader(), LC::follower(4), p),
              (std::pair{LC::make_leader(), LC::follower(4)}));
    // The edge flag passes through.
    EXPECT_TRUE(LeaderClockDelta{p}(LC::follower(4), LC::make_leader(), true).edge);
}

TEST(PeriodicClock, LeaderEmitsAnnouncementAfterAFullTurn) {
    const ClockParams params{12, 8};
    const std::size_t n = 16;
    auto c = init_configuration(n, [](AgentId u) { return u == 0 ? PC::make_leader() : PC::follower(); });
    SchedulerRng rng(5);
    std::optional<InteractionRecord<PC>> emission;
    auto observer = [&](const InteractionRecord<PC>& r, const auto&) {
        const bool before = r.before.initiator.leader ? r.before.initiator.announce != PC::no_signal
                                                       : r.before.responder.announce != PC::no_signal;
        const bool after = r.after.initiator.leader ? r.after.initiator.announce != PC::no_signal
                                                     : r.after.responder.announce != PC::no_signal;
        if (!emission && !before && after) emission = r;
    };
    auto stop = [](const Configuration<PC>& cfg) { return cfg.states[0].announce != PC::no_signal; };
    const auto report = run(c, PeriodicClockDelta{params}, stop, 100000000, rng, RunOptions{}, observer);
    ASSERT_TRUE(report.success);
    ASSERT_TRUE(emission.has_value());
    const bool leader_first = emission->before.initiator.leader;
    const PC follower = leader_first ? emission->before.responder : emission->before.initiator;
    const PC leader_after = leader_first ? emission->after.initiator : emission->after.responder;
    EXPECT_FALSE(follower.leader);
    EXPECT_EQ(follower.stage, 0);
    EXPECT_EQ(follower.level, params.max_level);
    EXPECT_EQ(leader_after.stage, 1);
    EXPECT_EQ(leader_after.announce, 1);
}

TEST(PeriodicClock, Examples) {
    const ClockParams params{12, 8};
    PC carrier = PC::follower();
    carrier.stage = 1;
    carrier.announce = 1;

    const auto [receiver, same] = periodic_clock_delta(PC::follower(), carrier, params);
    EXPECT_EQ(receiver.stage, 1);
    EXPECT_EQ(receiver.level, 0);
    EXPECT_EQ(receiver.announce, 1);
    EXPECT_EQ(same, carrier);

    PC in_stage_one = PC::follower();
    in_stage_one.stage = 1;
    in_stage_one.level = 4;
    const auto [unchanged, carrier_after] = periodic_clock_delta(in_stage_one, carrier, params);
    EXPECT_EQ(unchanged.stage, 1);
    EXPECT_FALSE(unchanged.announce == 1 && unchanged.level == 0);

    // A signal for stage+2 overwrites a stale one: stage-1 agent carrying
    // announce(1) meets announce(2).
    PC stale = PC::follower();
    stale.stage = 1;
    stale.level = 7;
    stale.announce = 1;
    PC fresh = PC::follower();
    fresh.stage = 2;
    fresh.announce = 2;
    const auto [updated, fresh_after] = periodic_clock_delta(stale, fresh, params);
    EXPECT_EQ(updated.stage, 2);
    EXPECT_EQ(updated.level, 0);
    EXPECT_EQ(updated.announce, 2);
    EXPECT_EQ(fresh_after, fresh);

    // Stages wrap around mod 3.
    PC last = PC::follower();
    last.stage = 2;
    PC wrap = PC::follower();
    wrap.stage = 0;
    wrap.announce = 0;
    EXPECT_EQ(periodic_clock_delta(last, wrap, params).first.stage, 0);
}

TEST(PeriodicClock, StagesAdvanceInOrder) {
    const ClockParams params{12, 8};
    auto c = init_configuration(24, [](AgentId u) { return u == 0 ? PC::make_leader() : PC::follower(); });
    SchedulerRng rng(21);
    bool ordered = true;
    std::size_t leader_stage_changes = 0;
    auto observer = [&](const InteractionRecord<PC>& r, const auto&) {
        for (auto [before, after] : {std::pair{r.before.initiator, r.after.initiator},
                                     std::pair{r.before.responder, r.after.responder}}) {
            if (after.stage != before.stage) {
                if (after.stage != next_stage(before.stage)) ordered = false;
                if (before.leader) ++leader_stage_changes;
            }
        }
    };
    run(c, PeriodicClockDelta{params}, [](const auto&) { return false; }, 3000000, rng, RunOptions{}, observer);
    EXPECT_TRUE(ordered);
    EXPECT_GE(leader_stage_changes, 3U) << "expected at least one full round of three stages";
}

TEST(LineFormation, Examples) {
    EXPECT_EQ(line_formation_delta(LS::L, LS::F, false), (Transition<LS>{LS::H, LS::T, true}));
    EXPECT_EQ(line_formation_delta(LS::H, LS::F, false), (Transition<LS>{LS::R, LS::H, true}));
    EXPECT_EQ(line_formation_delta(LS::D, LS::T, true), (Transition<LS>{LS::F, LS::F, false}));
    EXPECT_EQ(line_formation_delta(LS::H, LS::T, false), (Transition<LS>{LS::H, LS::T, false}));
    // Either ordering of the pair.
    EXPECT_EQ(line_formation_delta(LS::F, LS::L, false), (Transition<LS>{LS::T, LS::H, true}));
    EXPECT_EQ(line_formation_delta(LS::R, LS::D, true), (Transition<LS>{LS::D, LS::F, false}));
    // Rules need the right edge flag.
    EXPECT_EQ(line_formation_delta(LS::H, LS::F, true), (Transition<LS>{LS::H, LS::F, true}));
    EXPECT_EQ(line_formation_delta(LS::D, LS::R, false), (Transition<LS>{LS::D, LS::R, false}));
}

TEST(Predicates, SpanningLine) {
    auto line = path_of<LS>({LS::H, LS::R, LS::T}, {{0, 1}, {1, 2}});
    EXPECT_TRUE(is_spanning_line(line));

    auto cycle = line;
    cycle.edges.set(0, 2, true);
    EXPECT_FALSE(is_spanning_line(cycle));

    EXPECT_TRUE(is_spanning_line(path_of<LS>({LS::T, LS::H}, {{0, 1}})));
    EXPECT_FALSE(is_spanning_line(path_of<LS>({LS::H, LS::R, LS::T}, {{0, 1}})));           // T detached
    EXPECT_FALSE(is_spanning_line(path_of<LS>({LS::H, LS::F, LS::T}, {{0, 1}, {1, 2}})));   // interior not R
    EXPECT_FALSE(is_spanning_line(path_of<LS>({LS::H, LS::R, LS::H}, {{0, 1}, {1, 2}})));   // two heads
    EXPECT_TRUE(is_spanning_line(path_of<LS>({LS::R, LS::T, LS::H, LS::R}, {{2, 0}, {0, 3}, {3, 1}})));
    // Right edge count, but a triangle plus an isolated tail.
    EXPECT_FALSE(is_spanning_line(path_of<LS>({LS::H, LS::R, LS::R, LS::T}, {{0, 1}, {1, 2}, {2, 0}})));
}

TEST(Predicates, SpanningLineThroughOptionalProjection) {
    using Opt = std::optional<LS>;
    auto c = path_of<Opt>({LS::H, LS::R, LS::T}, {{0, 1}, {1, 2}});
    EXPECT_TRUE(is_spanning_line(c));
    c.states[1] = std::nullopt;
    EXPECT_FALSE(is_spanning_line(c));
}

TEST(Predicates, LeadersAndClocks) {
    auto followers = init_configuration(5, [](AgentId) { return LE::F; });
    EXPECT_FALSE(is_single_leader(followers));
    EXPECT_EQ(count_leaders(followers), 0U);
    followers.states[3] = LE::L;
    EXPECT_TRUE(is_single_leader(followers));

    const ClockParams params{12, 8};
    auto clocks = init_configuration(4, [](AgentId) { return MC::at(11); });
    EXPECT_FALSE(clock_max_reached(clocks, params));
    clocks.states[2] = MC::at(12);
    EXPECT_TRUE(clock_max_reached(clocks, params));
    clocks.states[2] = MC::end();
    EXPECT_TRUE(clock_max_reached(clocks, params));

    auto lc = init_configuration(3, [](AgentId u) { return u == 0 ? LC::make_leader() : LC::follower(11); });
    EXPECT_FALSE(leader_clock_max_reached(lc, params));
    lc.states[1] = LC::follower(12);
    EXPECT_TRUE(leader_clock_max_reached(lc, params));

    auto m = init_configuration(5, [](AgentId) { return MC::start(); });
    m.edges.set(0, 1, true);
    EXPECT_EQ(matched_agents(m), 2U);
}

TEST(Compose, SingleLayerBehavesLikeTheDelta) {
    using S = Fields<LE>;
    auto composed = compose<S>(0, on_field<0>(LeaderElectionDelta{}));
    for (LE a : {LE::L, LE::F})
        for (LE b : {LE::L, LE::F})
            for (bool e : {false, true}) {
                const auto plain = leader_election_delta(a, b, e);
                const auto t = composed(S{a}, S{b}, e);
                EXPECT_EQ(get<0>(t.initiator), plain.initiator);
                EXPECT_EQ(get<0>(t.responder), plain.responder);
                EXPECT_EQ(t.edge, plain.edge);
            }
}

TEST(Compose, TwoLayersActInOneInteraction) {
    using S = Fields<LE, MC>;
    auto composed = compose<S>(1, on_field<0>(LeaderElectionDelta{}), on_field<1>(MatchingClockDelta{}));
    const auto t = composed(S{LE::L, MC::start()}, S{LE::L, MC::start()}, false);
    EXPECT_EQ(get<0>(t.initiator), LE::L);
    EXPECT_EQ(get<0>(t.responder), LE::F);
    EXPECT_EQ(get<1>(t.initiator), MC::at(0));
    EXPECT_EQ(get<1>(t.responder), MC::at(0));
    EXPECT_TRUE(t.edge);
}

TEST(Compose, NonOwnerEdgeWritesAreIgnored) {
    using S = Fields<LE, MC>;
    auto composed = compose<S>(0, on_field<0>(LeaderElectionDelta{}), on_field<1>(MatchingClockDelta{}));
    const auto t = composed(S{LE::L, MC::start()}, S{LE::F, MC::start()}, false);
    EXPECT_EQ(get<1>(t.initiator), MC::at(0));  // the clock layer still updates its field
    EXPECT_FALSE(t.edge);                        // but its edge insertion is dropped
    EXPECT_THROW((compose<S>(2, on_field<0>(LeaderElectionDelta{}), on_field<1>(MatchingClockDelta{}))),
                 std::out_of_range);
}

TEST(Compose, LaterLayersSeeEarlierRewrites) {
    using S = Fields<int, int>;
    auto copy_first = make_layer<1>([](const S& a, const S& b, bool e) {
        return Transition<int>{get<0>(a), get<0>(b), e};
    });
    auto bump = make_layer<0>([](const S& a, const S& b, bool e) {
        return Transition<int>{get<0>(a) + 1, get<0>(b) + 1, e};
    });
    auto composed = compose<S>(0, bump, copy_first);
    const auto t = composed(S{1, 0}, S{5, 0}, false);
    EXPECT_EQ(get<1>(t.initiator), 2);
    EXPECT_EQ(get<1>(t.responder), 6);
}

TEST(Compose, SelectorPicksTheOwnerPerInteraction) {
    using S = Fields<bool, int>;
    auto wants_edge = make_layer<1>([](const S& a, const S& b, bool) {
        return Transition<int>{get<1>(a), get<1>(b), true};
    });
    auto keeps = make_layer<0>([](const S& a, const S& b, bool e) {
        return Transition<bool>{get<0>(a), get<0>(b), e};
    });
    auto owner = edge_owner_by([](const S& a, const S&) -> std::size_t { return get<0>(a) ? 1 : 0; });
    auto composed = compose<S>(owner, keeps, wants_edge);
    EXPECT_TRUE(composed(S{true, 0}, S{false, 0}, false).edge);
    EXPECT_FALSE(composed(S{false, 0}, S{false, 0}, false).edge);

    auto bad = compose<S>(edge_owner_by([](const S&, const S&) -> std::size_t { return 7; }), keeps, wants_edge);
    EXPECT_THROW(bad(S{}, S{}, false), std::out_of_range);
}
