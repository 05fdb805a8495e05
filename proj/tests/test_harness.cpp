#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netcon/netcon.hpp"

using namespace netcon;

namespace {

TrialReport report(std::uint64_t n, std::uint64_t interactions, bool success, std::uint64_t trial = 0) {
    TrialReport r;
    r.protocol = "test";
    r.n = n;
    r.trial = trial;
    r.seed = 100 + trial;
    r.interactions = interactions;
    r.parallel_time = parallel_time(interactions, n);
    r.success = success;
    r.stop_reason = success ? StopReason::predicate_satisfied : StopReason::budget_exhausted;
    return r;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("netcon_test_" + name)).string();
}

struct NeverMatches {
    Transition<MatchingClockState> operator()(const MatchingClockState& a, const MatchingClockState& b,
                                              bool edge) const {
        return {a, b, edge};
    }
};

}  // namespace

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
    // Position 0.95 * 19 = 18.05 in 0..19.
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(i * 10.0);
    EXPECT_NEAR(quantile(v, 0.95), 180.5, 1e-9);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.3), 7.0);
    EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
    EXPECT_THROW(quantile({1}, 1.5), std::invalid_argument);
}

TEST(Aggregate, SingletonAndMean) {
    auto one = aggregate({report(10, 50, true)});
    ASSERT_EQ(one.size(), 1U);
    EXPECT_DOUBLE_EQ(one[0].mean, 5.0);
    EXPECT_DOUBLE_EQ(one[0].median, 5.0);
    EXPECT_DOUBLE_EQ(one[0].max, 5.0);
    EXPECT_DOUBLE_EQ(one[0].success_rate, 1.0);

    auto two = aggregate({report(10, 40, true, 0), report(10, 60, true, 1)});
    ASSERT_EQ(two.size(), 1U);
    EXPECT_DOUBLE_EQ(two[0].mean, 5.0);
    EXPECT_DOUBLE_EQ(two[0].normalized.at("n"), 0.5);
    EXPECT_NEAR(two[0].normalized.at("n_ln_n"), 5.0 / (10 * std::log(10.0)), 1e-12);
    EXPECT_EQ(two[0].normalized.count("n_k_ln_n"), 0U);
}

TEST(Aggregate, FailuresCountInRateOnly) {
    auto s = aggregate({report(8, 16, true, 0), report(8, 800, false, 1), report(4, 4, false, 0)});
    ASSERT_EQ(s.size(), 2U);
    EXPECT_EQ(s[0].n, 4U);
    EXPECT_EQ(s[0].successes, 0U);
    EXPECT_TRUE(std::isnan(s[0].mean));
    EXPECT_EQ(s[1].n, 8U);
    EXPECT_EQ(s[1].trials, 2U);
    EXPECT_DOUBLE_EQ(s[1].success_rate, 0.5);
    EXPECT_DOUBLE_EQ(s[1].mean, 2.0);
    EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(Aggregate, GroupsByStrandLengthAndCopies) {
    auto a = report(64, 640, true);
    a.summary["k"] = "8";
    a.summary["copies"] = "2";
    auto b = a;
    b.summary["k"] = "16";
    const auto s = aggregate({a, b});
    ASSERT_EQ(s.size(), 2U);
    EXPECT_EQ(s[0].k, 8U);
    EXPECT_EQ(s[1].k, 16U);
    EXPECT_NEAR(s[0].normalized.at("n_k_ln_n_ln_l"), 10.0 / (64 * (8 + std::log(64.0)) * std::log(2.0)), 1e-12);
}

TEST(ScalingTable, ConstantTimeIsFlat) {
    std::vector<TrialReport> reports;
    for (std::uint64_t n : {16, 32, 64}) reports.push_back(report(n, 3 * n, true));
    const auto table = scaling_table(aggregate(reports), "1");
    ASSERT_EQ(table.rows.size(), 3U);
    EXPECT_DOUBLE_EQ(table.flatness, 1.0);
    for (const auto& row : table.rows) {
        EXPECT_DOUBLE_EQ(row.ratio, 3.0);
        EXPECT_DOUBLE_EQ(row.relative, 1.0);
    }
    // Same data against n: ratios 3/16, 3/32, 3/64.
    EXPECT_DOUBLE_EQ(scaling_table(aggregate(reports), "n").flatness, 4.0);
}

TEST(ScalingTable, RejectsBadGrids) {
    std::vector<TrialReport> two = {report(16, 16, true), report(64, 64, true)};
    EXPECT_THROW(scaling_table(aggregate(two), "1"), std::invalid_argument);
    std::vector<TrialReport> narrow = {report(16, 16, true), report(20, 20, true), report(32, 32, true)};
    EXPECT_THROW(scaling_table(aggregate(narrow), "1"), std::invalid_argument);
    std::vector<TrialReport> failing = {report(16, 16, true), report(32, 32, false), report(64, 64, true)};
    EXPECT_THROW(scaling_table(aggregate(failing), "1"), std::invalid_argument);
    std::vector<TrialReport> fine = {report(16, 16, true), report(32, 32, true), report(64, 64, true)};
    EXPECT_THROW(scaling_table(aggregate(fine), "n^2"), std::invalid_argument);
}

TEST(ScalingTable, DerivedPopulationGrid) {
    // l spans 2..8 while n = 4lk + 64 only spans a factor of 3.
    std::vector<TrialReport> reports;
    for (std::size_t l : {2, 4, 8}) {
        const std::uint64_t n = 4 * l * 16 + 64;
        auto r = report(n, n * 100, true);
        r.summary["k"] = "16";
        r.summary["copies"] = std::to_string(l);
        reports.push_back(r);
    }
    const auto table = scaling_table(aggregate(reports), "1");
    EXPECT_DOUBLE_EQ(table.flatness, 1.0);
    EXPECT_EQ(table.rows.size(), 3U);
}

TEST(Results, CsvRoundTrip) {
    auto a = report(12, 37, true, 0);
    a.summary["leaders"] = "1";
    a.summary["note"] = "a,b \"c\"";
    auto b = report(12, 99, false, 1);
    b.summary["edges"] = "3";
    const Metadata meta = {{"protocol", "test"}, {"trials", "2"}};
    std::stringstream io;
    write_csv({a, b}, meta, io);
    const auto back = read_csv_results(io);
    EXPECT_EQ(back.metadata, meta);
    ASSERT_EQ(back.reports.size(), 2U);
    EXPECT_EQ(back.reports[0], a);
    EXPECT_EQ(back.reports[1], b);
}

TEST(Results, CsvRejectsMalformedInput) {
    std::stringstream bad_header("protocol,n,seed\n");
    EXPECT_THROW(read_csv_results(bad_header), std::invalid_argument);
    std::stringstream short_row(
        "protocol,n,trial,seed,interactions,parallel_time,success,stop_reason\n"
        "x,4,0,1,10\n");
    EXPECT_THROW(read_csv_results(short_row), std::invalid_argument);
    std::stringstream bad_bool(
        "protocol,n,trial,seed,interactions,parallel_time,success,stop_reason\n"
        "x,4,0,1,10,2.5,yes,predicate-satisfied\n");
    EXPECT_THROW(read_csv_results(bad_bool), std::invalid_argument);
}

TEST(Results, FilesAgreeAcrossFormats) {
    SweepSpec spec;
    spec.protocol = "leader-election";
    spec.n_values = {16, 32};
    spec.trials = 3;
    const auto reports = run_sweep(spec);
    const auto stats = aggregate(reports);
    const auto csv = temp_path("results.csv");
    const auto json = temp_path("results.json");
    emit_results(reports, stats, ResultFormat::csv, csv, spec.describe());
    emit_results(reports, stats, ResultFormat::json, json, spec.describe());

    const auto from_csv = read_results(csv);
    const auto from_json = read_results(json);
    EXPECT_EQ(from_csv.reports, reports);
    EXPECT_EQ(from_json.reports, reports);
    EXPECT_EQ(from_csv.metadata, from_json.metadata);
    EXPECT_EQ(from_json.metadata.at("protocol"), "leader-election");
    ASSERT_EQ(from_json.stats.size(), stats.size());
    EXPECT_DOUBLE_EQ(from_json.stats[1].mean, stats[1].mean);
    EXPECT_TRUE(std::filesystem::exists(stats_sidecar_path(csv)));

    std::ifstream side(stats_sidecar_path(csv));
    std::string header;
    std::getline(side, header);
    EXPECT_EQ(header.rfind("protocol,n,k,copies,trials,successes", 0), 0U);
    for (const auto& p : {csv, json, stats_sidecar_path(csv)}) std::remove(p.c_str());

    EXPECT_THROW(read_results(temp_path("missing.csv")), std::runtime_error);
    EXPECT_THROW(result_format_from_string("xml"), std::invalid_argument);
}

TEST(Sweep, LeaderElectionAllSucceed) {
    SweepSpec spec;
    spec.protocol = "leader-election";
    spec.n_values = {64};
    spec.trials = 30;
    spec.master_seed = 5;
    const auto reports = run_sweep(spec);
    ASSERT_EQ(reports.size(), 30U);
    for (std::size_t t = 0; t < reports.size(); ++t) {
        EXPECT_TRUE(reports[t].success);
        EXPECT_EQ(reports[t].trial, t);
        EXPECT_EQ(reports[t].seed, trial_seed(5, 64, t));
        EXPECT_EQ(reports[t].summary.at("leaders"), "1");
    }
}

TEST(Sweep, ValidatesSpec) {
    SweepSpec spec;
    spec.protocol = "leader-election";
    spec.n_values = {16};
    spec.trials = 0;
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec.trials = 1;
    spec.n_values = {};
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec.n_values = {1};
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec.n_values = {16};
    spec.protocol = "nope";
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
    spec.protocol = "leader-election";
    spec.settings.budget_factor = 0;
    EXPECT_THROW(run_sweep(spec), std::invalid_argument);
}

TEST(Sweep, DeterministicAndThreadIndependent) {
    SweepSpec spec;
    spec.protocol = "matching-clock";
    spec.n_values = {32, 16};
    spec.trials = 4;
    spec.master_seed = 11;
    const auto single = run_sweep(spec);
    EXPECT_EQ(run_sweep(spec), single);
    spec.threads = 4;
    EXPECT_EQ(run_sweep(spec), single);
    EXPECT_EQ(single.front().n, 16U);
    EXPECT_EQ(single.back().n, 32U);
}

TEST(Sweep, SubSeedsDoNotDependOnGrid) {
    // A trial's seed, and so its run, only depends on (master, n, trial).
    SweepSpec small;
    small.protocol = "leader-election";
    small.n_values = {24};
    small.trials = 3;
    SweepSpec large = small;
    large.n_values = {48, 24};
    large.trials = 5;
    const auto a = run_sweep(small);
    const auto b = run_sweep(large);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(a[t], b[t]);

    std::set<std::uint64_t> seeds;
    for (std::uint64_t n : {16, 32})
        for (std::uint64_t t = 0; t < 50; ++t) seeds.insert(trial_seed(1, n, t));
    EXPECT_EQ(seeds.size(), 100U);
    EXPECT_EQ(trial_seed(7, 16, 3), derive_seed(7, {16, 3}));
}

TEST(Sweep, BudgetExhaustionIsLogged) {
    SweepSpec spec;
    spec.protocol = "leader-election";
    spec.n_values = {64};
    spec.trials = 2;
    spec.settings.budget_factor = 1e-3;
    std::ostringstream log;
    const auto reports = run_sweep(spec, &log);
    for (const auto& r : reports) EXPECT_FALSE(r.success);
    const auto text = log.str();
    EXPECT_NE(text.find("budget exhausted: leader-election n=64 trial=0"), std::string::npos);
    EXPECT_NE(text.find("trial=1"), std::string::npos);
}

TEST(SweepConfig, AppliesKnownKeys) {
    SweepSpec spec;
    apply_sweep_json(spec, nlohmann::json::parse(R"({
        "protocol": "replication", "nValues": [64, 128], "trials": 7, "masterSeed": 42, "threads": 2,
        "params": {"max": 40, "d": 3, "eta": 1.5, "bits": "1011", "k": 9, "copies": 4,
                   "budgetFactor": 2.5, "dist": "zeroone", "extension": 0.2}})"));
    EXPECT_EQ(spec.protocol, "replication");
    EXPECT_EQ(spec.n_values, (std::vector<std::size_t>{64, 128}));
    EXPECT_EQ(spec.trials, 7U);
    EXPECT_EQ(spec.master_seed, 42U);
    EXPECT_EQ(spec.threads, 2U);
    EXPECT_EQ(spec.settings.clock.max_level, 40);
    EXPECT_EQ(spec.settings.clock.d_slack, 3);
    EXPECT_DOUBLE_EQ(spec.settings.eta, 1.5);
    EXPECT_EQ(spec.settings.bits, "1011");
    EXPECT_EQ(spec.settings.k, 9U);
    EXPECT_EQ(spec.settings.copies, 4U);
    EXPECT_DOUBLE_EQ(spec.settings.budget_factor, 2.5);
    EXPECT_EQ(spec.settings.dist, "zeroone");
    EXPECT_DOUBLE_EQ(spec.settings.extension, 0.2);
    const auto m = spec.describe();
    EXPECT_EQ(m.at("bits"), "1011");
    EXPECT_EQ(m.at("copies"), "4");
    EXPECT_EQ(m.count("k"), 0U);

    // Absent keys keep their values.
    apply_sweep_json(spec, nlohmann::json::parse(R"({"trials": 3})"));
    EXPECT_EQ(spec.trials, 3U);
    EXPECT_EQ(spec.master_seed, 42U);
}

TEST(SweepConfig, RejectsUnknownKeysAndBadFiles) {
    SweepSpec spec;
    EXPECT_THROW(apply_sweep_json(spec, nlohmann::json::parse(R"({"seed": 1})")), std::invalid_argument);
    EXPECT_THROW(apply_sweep_json(spec, nlohmann::json::parse(R"({"params": {"maxLevel": 1}})")),
                 std::invalid_argument);
    EXPECT_THROW(apply_sweep_json(spec, nlohmann::json::parse("[1, 2]")), std::invalid_argument);
    EXPECT_THROW(load_sweep_config(spec, temp_path("no_such_config.json")), std::runtime_error);

    const auto path = temp_path("broken_config.json");
    std::ofstream(path) << "{ not json";
    EXPECT_THROW(load_sweep_config(spec, path), std::invalid_argument);
    std::remove(path.c_str());
}

TEST(VerifyLemma2, InteractionCountAndGuards) {
    EXPECT_EQ(lemma2_interactions(100), 51U);
    EXPECT_EQ(lemma2_interactions(64), 33U);  // ceil(32.64)
    EXPECT_THROW(verify_lemma2(4, 1, 1), std::invalid_argument);
    EXPECT_THROW(verify_lemma2(65, 1, 1), std::invalid_argument);
    EXPECT_THROW(verify_lemma2(64, 0, 1), std::invalid_argument);
}

TEST(VerifyLemma2, ReportsPerTrialMatching) {
    const auto r = verify_lemma2(128, 5, 3);
    EXPECT_EQ(r.interactions, lemma2_interactions(128));
    ASSERT_EQ(r.matched.size(), 5U);
    std::size_t below = 0;
    for (auto m : r.matched) {
        EXPECT_EQ(m % 2, 0U);
        EXPECT_LE(m, 128U);
        below += 2 * m < 128;
    }
    EXPECT_EQ(r.failures, below);
    EXPECT_EQ(r.pass, below == 0);
}

TEST(VerifyLemma2, NegativeControlFails) {
    const auto r = verify_lemma2(64, 4, 1, NeverMatches{});
    EXPECT_EQ(r.failures, 4U);
    EXPECT_FALSE(r.pass);
    for (auto m : r.matched) EXPECT_EQ(m, 0U);
}

TEST(VerifyContraction, SmallCasesPass) {
    const auto r = verify_potential_contraction(3);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.violations, 0U);
    // Every 0/1 configuration for n = 2, 3.
    EXPECT_EQ(r.configurations, 4U + 8U);
    EXPECT_FALSE(r.first_violation.has_value());
    EXPECT_LE(r.worst_ratio, BigRational(1));
    EXPECT_THROW(verify_potential_contraction(1), std::invalid_argument);
    EXPECT_THROW(verify_potential_contraction(17), std::invalid_argument);
}

TEST(PairFrequencies, CountsEveryDraw) {
    const auto f = pair_frequencies(5, 20000, 9);
    EXPECT_EQ(f.degrees_of_freedom, 19U);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(f.counts[i * 5 + i], 0U);
        for (std::size_t r = 0; r < 5; ++r) total += f.counts[i * 5 + r];
    }
    EXPECT_EQ(total, 20000U);
    double chi = 0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t r = 0; r < 5; ++r)
            if (i != r) chi += std::pow(static_cast<double>(f.counts[i * 5 + r]) - 1000.0, 2) / 1000.0;
    EXPECT_NEAR(f.chi_square, chi, 1e-9);
}

TEST(EdgeCollector, RecordsEveryMatchingEdge) {
    const auto p = edge_collector_profile(64, 2);
    EXPECT_EQ(p.edges, 32U);
    EXPECT_EQ(p.tail_edges, 4U);  // ceil(3.2)
    EXPECT_TRUE(std::is_sorted(p.first_use.begin(), p.first_use.end()));
    EXPECT_EQ(p.tail_interactions, p.first_use.back() - p.first_use[p.edges - p.tail_edges - 1]);
    EXPECT_GT(p.tail_over_n_ln_n, 0.0);
}
