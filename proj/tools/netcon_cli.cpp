// Command-line front end: simulate, sweep, sort, replicate, verify.
//
// Exit codes: 0 when every trial succeeded and every verification passed,
// 1 when something failed, 2 on bad usage or unreadable input.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netcon/netcon.hpp"

namespace {

using netcon::AggregateStats;
using netcon::Metadata;
using netcon::ResultFormat;
using netcon::SweepSpec;
using netcon::TrialReport;

constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    double budget_factor = 16.0;
    std::string out;
    std::string format = "csv";
    std::string trace;
    std::string config;
    int max_level = 64;
    int d_slack = 8;
    double eta = 2.0;
    unsigned threads = 1;
};

struct RunParams {
    std::string protocol;
    std::vector<std::size_t> n_values;
    std::size_t k = 16;
    std::size_t copies = 2;
    std::string bits;
    std::string dist = "permutation";
    double extension = 0.1;
};

/// Builds the effective sweep: defaults, then the config file, then every
/// flag given explicitly on the command line.
class SpecBuilder {
public:
    SpecBuilder(const CLI::App* sub, const Globals& g) : sub_(sub), g_(g) {}

    /// Whether `name` was given on the subcommand or any enclosing command.
    bool given(const std::string& name) const {
        for (const CLI::App* a = sub_; a; a = a->get_parent()) {
            try {
                if (a->get_option(name)->count() > 0) return true;
            } catch (const CLI::OptionNotFound&) {
            }
        }
        return false;
    }

    SweepSpec build(const RunParams& p) const {
        SweepSpec spec;
        spec.n_values = p.n_values;
        spec.protocol = p.protocol;
        if (!g_.config.empty()) netcon::load_sweep_config(spec, g_.config);
        auto& s = spec.settings;
        if (given("--protocol")) spec.protocol = p.protocol;
        if (given("--n") || given("--n-values")) spec.n_values = p.n_values;
        if (given("--seed") || g_.config.empty()) spec.master_seed = g_.seed;
        if (given("--trials") || g_.config.empty()) spec.trials = g_.trials;
        if (given("--threads") || g_.config.empty()) spec.threads = g_.threads;
        if (given("--budget-factor") || g_.config.empty()) s.budget_factor = g_.budget_factor;
        if (given("--max-level") || g_.config.empty()) s.clock.max_level = g_.max_level;
        if (given("--d-slack") || g_.config.empty()) s.clock.d_slack = g_.d_slack;
        if (given("--eta") || g_.config.empty()) s.eta = g_.eta;
        if (given("--k") || g_.config.empty()) s.k = p.k;
        if (given("--copies") || g_.config.empty()) s.copies = p.copies;
        if (given("--bits") || g_.config.empty()) s.bits = p.bits;
        if (given("--dist") || g_.config.empty()) s.dist = p.dist;
        if (given("--extension") || g_.config.empty()) s.extension = p.extension;
        return spec;
    }

private:
    const CLI::App* sub_;
    const Globals& g_;
};

/// Trace file shared by a whole invocation.
class TraceSink {
public:
    explicit TraceSink(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw UsageError("cannot open trace file '" + path + "'");
        *file_ << "# index,initiator,responder,initiator_before,responder_before,edge_before,"
                  "initiator_after,responder_after,edge_after\n";
    }
    std::ostream* stream() { return file_ ? file_.get() : nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string describe_ratio(const AggregateStats& s) {
    std::string out;
    for (const auto& [name, value] : s.normalized)
        if (name != "1") out += " mean/" + name + "=" + netcon::format_double(value);
    return out;
}

void print_stat_lines(const std::vector<AggregateStats>& stats) {
    for (const auto& s : stats) {
        std::cerr << s.protocol << " n=" << s.n;
        if (s.k > 0) std::cerr << " k=" << s.k;
        if (s.copies > 0) std::cerr << " copies=" << s.copies;
        std::cerr << " success=" << s.successes << "/" << s.trials << " mean=" << netcon::format_double(s.mean)
                  << " median=" << netcon::format_double(s.median) << " p95=" << netcon::format_double(s.p95)
                  << " max=" << netcon::format_double(s.max) << describe_ratio(s) << '\n';
    }
}

/// Writes reports to --out, or CSV/JSON on standard output without one.
void write_reports(const Globals& g, const std::vector<TrialReport>& reports, const std::vector<AggregateStats>& stats,
                   const Metadata& metadata) {
    const auto format = netcon::result_format_from_string(g.format);
    if (!g.out.empty()) {
        netcon::emit_results(reports, stats, format, g.out, metadata);
        return;
    }
    if (format == ResultFormat::json) {
        std::cout << netcon::to_json(netcon::ResultSet{metadata, reports, stats}).dump(2) << '\n';
    } else {
        netcon::write_csv(reports, metadata, std::cout);
    }
}

Metadata with_command(Metadata m, const std::string& command, const Globals& g) {
    m["command"] = command;
    m["format"] = g.format;
    if (!g.config.empty()) m["config"] = g.config;
    return m;
}

bool all_succeeded(const std::vector<TrialReport>& reports) {
    for (const auto& r : reports)
        if (!r.success) return false;
    return true;
}

int run_reports(const std::string& command, const Globals& g, const SweepSpec& spec) {
    TraceSink trace(g.trace);
    SweepSpec effective = spec;
    effective.settings.trace = trace.stream();
    effective.validate();
    const auto reports = netcon::run_sweep(effective, &std::cerr);
    const auto stats = netcon::aggregate(reports);
    print_stat_lines(stats);
    write_reports(g, reports, stats, with_command(effective.describe(), command, g));
    return all_succeeded(reports) ? 0 : exit_failed;
}

// ---------------------------------------------------------------------------
// replicate

struct ReplicateParams {
    std::string bits;
    std::string bits_file;
    std::size_t copies = 2;
    std::size_t n = 0;  // 0: default pool size for k and copies
    std::uint64_t budget = 0;  // 0: budget factor times the bound
};

int run_replicate(const Globals& g, const ReplicateParams& p) {
    std::vector<netcon::StrandSpec> specs;
    if (!p.bits_file.empty()) specs = netcon::load_strand_specs(p.bits_file);
    if (!p.bits.empty()) specs.push_back(netcon::StrandSpec::parse(p.bits));
    if (specs.empty()) throw UsageError("replicate: give --bits or --bits-file");
    if (p.copies < 1) throw UsageError("replicate: --copies must be >= 1");

    TraceSink trace(g.trace);
    netcon::TrialSettings settings;
    settings.trace = trace.stream();
    std::vector<TrialReport> reports;
    for (const auto& spec : specs) {
        const std::size_t n = p.n > 0 ? p.n : netcon::default_replication_population(spec.size(), p.copies);
        if (n < spec.size()) throw UsageError("replicate: --n is smaller than the strand");
        const std::uint64_t budget =
            p.budget > 0 ? p.budget
                         : netcon::scaled_budget(netcon::replication_bound(n, spec.size(), p.copies), g.budget_factor);
        for (std::uint64_t t = 0; t < g.trials; ++t) {
            const auto seed = netcon::trial_seed(g.seed, n, t);
            if (settings.trace) *settings.trace << "# replication n=" << n << " trial=" << t << " seed=" << seed << '\n';
            auto config = netcon::init_configuration(n, [](netcon::AgentId) {
                return netcon::ReplicationAgentState::free_agent();
            });
            netcon::seed_strand(config, spec);
            netcon::SchedulerRng rng(seed);
            auto report = netcon::run_replication(config, spec, p.copies, budget, rng, settings);
            report.trial = t;
            report.summary["budget"] = std::to_string(budget);
            if (!report.success) std::cerr << netcon::budget_exhausted_line(report) << '\n';
            reports.push_back(std::move(report));
        }
    }
    const auto stats = netcon::aggregate(reports);
    print_stat_lines(stats);
    Metadata m = {{"protocol", "replication"},
                  {"copies", std::to_string(p.copies)},
                  {"trials", std::to_string(g.trials)},
                  {"master_seed", std::to_string(g.seed)},
                  {"budget_factor", netcon::format_double(g.budget_factor)}};
    if (p.n > 0) m["n"] = std::to_string(p.n);
    if (p.budget > 0) m["budget"] = std::to_string(p.budget);
    if (!p.bits_file.empty()) m["bits_file"] = p.bits_file;
    if (!p.bits.empty()) m["bits"] = p.bits;
    write_reports(g, reports, stats, with_command(m, "replicate", g));
    return all_succeeded(reports) ? 0 : exit_failed;
}

// ---------------------------------------------------------------------------
// verify

/// Verification output: one row of key/value pairs per checked case.
using Row = std::map<std::string, std::string>;

void write_rows(const Globals& g, const std::vector<Row>& rows, const Metadata& metadata) {
    std::ostringstream body;
    if (netcon::result_format_from_string(g.format) == ResultFormat::json) {
        body << nlohmann::json{{"metadata", metadata}, {"results", rows}}.dump(2) << '\n';
    } else {
        for (const auto& [key, value] : metadata) body << "# " << key << '=' << value << '\n';
        std::vector<std::string> keys;
        for (const auto& row : rows)
            for (const auto& [key, value] : row)
                if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        for (std::size_t i = 0; i < keys.size(); ++i) body << (i ? "," : "") << keys[i];
        body << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < keys.size(); ++i) {
                auto it = row.find(keys[i]);
                body << (i ? "," : "") << (it == row.end() ? "" : it->second);
            }
            body << '\n';
        }
    }
    if (g.out.empty()) {
        std::cout << body.str();
        return;
    }
    std::ofstream out(g.out);
    if (!out) throw std::runtime_error("cannot open '" + g.out + "' for writing");
    out << body.str();
    if (!out.flush()) throw std::runtime_error("write to '" + g.out + "' failed");
}

int verify_lemma2(const Globals& g, const std::vector<std::size_t>& n_values, std::size_t trials) {
    std::vector<Row> rows;
    bool pass = true;
    for (auto n : n_values) {
        const auto r = netcon::verify_lemma2(n, trials, g.seed);
        std::size_t least = n;
        for (auto m : r.matched) least = std::min(least, m);
        std::cerr << "lemma2 n=" << n << " interactions=" << r.interactions << " trials=" << trials
                  << " failures=" << r.failures << " min_matched=" << least << " need=" << n / 2
                  << (r.pass ? " pass" : " FAIL") << '\n';
        rows.push_back({{"n", std::to_string(n)},
                        {"interactions", std::to_string(r.interactions)},
                        {"trials", std::to_string(trials)},
                        {"failures", std::to_string(r.failures)},
                        {"min_matched", std::to_string(least)},
                        {"pass", netcon::bool_text(r.pass)}});
        pass = pass && r.pass;
    }
    write_rows(g, rows, {{"command", "verify lemma2"}, {"master_seed", std::to_string(g.seed)}});
    return pass ? 0 : exit_failed;
}

int verify_potential(const Globals& g, std::size_t max_n) {
    const auto r = netcon::verify_potential_contraction(max_n);
    std::cerr << "potential max_n=" << max_n << " configurations=" << r.configurations << " violations=" << r.violations
              << " worst_ratio=" << r.worst_ratio.str() << " (n=" << r.worst_n << " mask=" << r.worst_mask << ")"
              << (r.pass ? " pass" : " FAIL") << '\n';
    if (r.first_violation) std::cerr << "first violation: " << *r.first_violation << '\n';
    write_rows(g,
               {{{"max_n", std::to_string(max_n)},
                 {"configurations", std::to_string(r.configurations)},
                 {"violations", std::to_string(r.violations)},
                 {"worst_ratio", r.worst_ratio.str()},
                 {"worst_ratio_value", netcon::format_double(static_cast<double>(r.worst_ratio))},
                 {"worst_n", std::to_string(r.worst_n)},
                 {"worst_mask", std::to_string(r.worst_mask)},
                 {"pass", netcon::bool_text(r.pass)}}},
               {{"command", "verify potential"}});
    return r.pass ? 0 : exit_failed;
}

int verify_scaling(const Globals& g, const SweepSpec& spec, const std::string& normalizer, double max_flatness) {
    auto effective = spec;
    effective.validate();
    const auto reports = netcon::run_sweep(effective, &std::cerr);
    const auto stats = netcon::aggregate(reports);
    print_stat_lines(stats);
    const auto table = netcon::scaling_table(stats, normalizer);
    std::vector<Row> rows;
    for (const auto& row : table.rows) {
        rows.push_back({{"n", std::to_string(row.n)},
                        {"k", std::to_string(row.k)},
                        {"copies", std::to_string(row.copies)},
                        {"normalizer", row.normalizer},
                        {"ratio", netcon::format_double(row.ratio)},
                        {"relative", netcon::format_double(row.relative)}});
    }
    const bool pass = all_succeeded(reports) && table.flatness <= max_flatness;
    std::cerr << "scaling " << spec.protocol << " normalizer=" << normalizer
              << " flatness=" << netcon::format_double(table.flatness) << " limit=" << netcon::format_double(max_flatness)
              << (pass ? " pass" : " FAIL") << '\n';
    auto m = with_command(effective.describe(), "verify scaling", g);
    m["normalizer"] = normalizer;
    m["flatness"] = netcon::format_double(table.flatness);
    m["max_flatness"] = netcon::format_double(max_flatness);
    write_rows(g, rows, m);
    return pass ? 0 : exit_failed;
}

int verify_edge_collector(const Globals& g, std::size_t n) {
    netcon::ClockParams params{g.max_level, g.d_slack};
    const auto p = netcon::edge_collector_profile(n, g.seed, params);
    std::cerr << "edge-collector n=" << n << " edges=" << p.edges << " tail_edges=" << p.tail_edges
              << " tail_parallel_time/(n ln n)=" << netcon::format_double(p.tail_over_n_ln_n) << '\n';
    write_rows(g,
               {{{"n", std::to_string(n)},
                 {"edges", std::to_string(p.edges)},
                 {"tail_edges", std::to_string(p.tail_edges)},
                 {"tail_interactions", std::to_string(p.tail_interactions)},
                 {"tail_over_n_ln_n", netcon::format_double(p.tail_over_n_ln_n)}}},
               {{"command", "verify edge-collector"}, {"master_seed", std::to_string(g.seed)}});
    return 0;
}

/// Help of the innermost subcommand that was parsed, without the footer.
std::string usage_of(CLI::App& app) {
    CLI::App* current = &app;
    for (;;) {
        auto subs = current->get_subcommands();
        if (subs.empty()) break;
        current = subs.front();
    }
    if (current == &app) return app.help();
    return current->help() + "Run '" + app.get_name() + " --help' for the protocol list and defaults.\n";
}

std::string help_footer() {
    std::ostringstream out;
    out << "\nProtocols (simulate/sweep --protocol):\n";
    for (const auto& p : netcon::protocol_registry()) out << "  " << p.name << "\n      " << p.description << '\n';
    out << "\nDefaults: max=64 d=8 eta=2 budget factor 16 extension 0.1 (10% extra interactions after the stop\n"
           "predicate first holds). Each trial's seed is derived from (--seed, n, trial index).\n"
           "A --config JSON file mirrors the sweep spec:\n"
           "  {\"protocol\": ..., \"nValues\": [...], \"trials\": ..., \"masterSeed\": ..., \"threads\": ...,\n"
           "   \"params\": {\"max\", \"d\", \"eta\", \"bits\", \"k\", \"copies\", \"budgetFactor\", \"dist\", \"extension\"}}\n"
           "Flags given on the command line override the file.\n"
           "Exit status: 0 pass, 1 failed trial or verification, 2 usage or input error.\n";
    return out.str();
}

void add_run_params(CLI::App* sub, RunParams& p, bool grid) {
    sub->add_option("--protocol", p.protocol, "protocol name (list in the top-level --help)");
    if (grid) {
        sub->add_option("--n-values", p.n_values, "population sizes, comma separated")->delimiter(',');
    } else {
        sub->add_option_function<std::size_t>(
            "--n", [&p](std::size_t n) { p.n_values = {n}; }, "population size");
    }
    sub->add_option("--k", p.k, "replication: random strand length")->capture_default_str();
    sub->add_option("--copies", p.copies, "replication: strands wanted, original included")->capture_default_str();
    sub->add_option("--bits", p.bits, "replication: strand bits (overrides --k)");
    sub->add_option("--dist", p.dist, "bubble-sort input: zeroone|uniform|permutation")->capture_default_str();
    sub->add_option("--extension", p.extension, "extra interactions after first hold, fraction of the run")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population-protocol simulator for the network-constructor model"};
    app.footer(help_footer());
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--trials", g.trials, "trials per population size")->capture_default_str();
    app.add_option("--budget-factor", g.budget_factor, "budget = factor x protocol bound")->capture_default_str();
    app.add_option("--out", g.out, "result file (standard output when absent)");
    app.add_option("--format", g.format, "result format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--trace", g.trace, "per-interaction records file (runs single-threaded)");
    app.add_option("--config", g.config, "JSON sweep spec; flags win")->check(CLI::ExistingFile);
    app.add_option("--max-level", g.max_level, "clock level cap max")->capture_default_str();
    app.add_option("--d-slack", g.d_slack, "clock slack d")->capture_default_str();
    app.add_option("--eta", g.eta, "whp exponent in bounds")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads for independent trials")->capture_default_str();

    RunParams simulate_params;
    auto* simulate = app.add_subcommand("simulate", "run one protocol at one population size");
    add_run_params(simulate, simulate_params, false);

    RunParams sweep_params;
    auto* sweep = app.add_subcommand("sweep", "run one protocol over a grid of population sizes");
    add_run_params(sweep, sweep_params, true);

    RunParams sort_params;
    sort_params.protocol = "bubble-sort";
    auto* sort = app.add_subcommand("sort", "probabilistic bubble-sort trials");
    sort->add_option_function<std::size_t>(
        "--n", [&](std::size_t n) { sort_params.n_values = {n}; }, "array length");
    sort->add_option("--n-values", sort_params.n_values, "array lengths, comma separated")->delimiter(',');
    sort->add_option("--dist", sort_params.dist, "zeroone|uniform|permutation")->capture_default_str();

    ReplicateParams replicate_params;
    auto* replicate = app.add_subcommand("replicate", "strand self-replication");
    replicate->add_option("--bits", replicate_params.bits, "strand bits, e.g. 1011");
    replicate->add_option("--bits-file", replicate_params.bits_file, "file with one 0/1 strand per line")
        ->check(CLI::ExistingFile);
    replicate->add_option("--copies", replicate_params.copies, "strands wanted, original included")
        ->capture_default_str();
    replicate->add_option("--n", replicate_params.n, "population size (default 4*copies*k + 64)");
    replicate->add_option("--budget", replicate_params.budget, "interaction budget (default from --budget-factor)");

    auto* verify = app.add_subcommand("verify", "checks of individual analytic statements");
    verify->require_subcommand(1);

    std::vector<std::size_t> lemma2_n = {512, 1024, 2048};
    auto* lemma2 = verify->add_subcommand("lemma2", "matched agents after ceil(0.51 n) matching-clock interactions");
    lemma2->add_option("--n-values", lemma2_n, "even population sizes >= 64")->delimiter(',')->capture_default_str();

    std::size_t max_n = 14;
    auto* potential = verify->add_subcommand("potential", "exhaustive bubble-sort potential contraction");
    potential->add_option("--max-n", max_n, "largest length, 2..16")->capture_default_str();

    RunParams scaling_params;
    std::string normalizer = "n_ln_n";
    double max_flatness = 2.0;
    auto* scaling = verify->add_subcommand("scaling", "ratio of mean parallel time to a normalizer across a grid");
    add_run_params(scaling, scaling_params, true);
    scaling->add_option("--normalizer", normalizer, "1|n|n_ln_n|n_k_ln_n|n_k_ln_n_ln_l")->capture_default_str();
    scaling->add_option("--max-flatness", max_flatness, "largest allowed max/min ratio")->capture_default_str();

    std::size_t collector_n = 1024;
    auto* collector = verify->add_subcommand("edge-collector", "first use of every matching edge (informational)");
    collector->add_option("--n", collector_n, "population size")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (simulate->parsed()) {
            auto spec = SpecBuilder(simulate, g).build(simulate_params);
            if (spec.protocol.empty()) throw UsageError("simulate: --protocol is required");
            if (spec.n_values.size() != 1) throw UsageError("simulate: give exactly one --n");
            return run_reports("simulate", g, spec);
        }
        if (sweep->parsed()) {
            auto spec = SpecBuilder(sweep, g).build(sweep_params);
            if (spec.protocol.empty()) throw UsageError("sweep: --protocol is required");
            return run_reports("sweep", g, spec);
        }
        if (sort->parsed()) {
            auto spec = SpecBuilder(sort, g).build(sort_params);
            spec.protocol = "bubble-sort";
            return run_reports("sort", g, spec);
        }
        if (replicate->parsed()) return run_replicate(g, replicate_params);
        if (lemma2->parsed()) {
            // 50 trials per n unless --trials says otherwise.
            const std::size_t trials = app.get_option("--trials")->count() > 0 ? g.trials : 50;
            return verify_lemma2(g, lemma2_n, trials);
        }
        if (potential->parsed()) return verify_potential(g, max_n);
        if (scaling->parsed()) {
            auto spec = SpecBuilder(scaling, g).build(scaling_params);
            if (spec.protocol.empty()) throw UsageError("verify scaling: --protocol is required");
            return verify_scaling(g, spec, normalizer, max_flatness);
        }
        if (collector->parsed()) return verify_edge_collector(g, collector_n);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << usage_of(app) << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n\n" << usage_of(app) << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failed;
    }
    std::cerr << app.help() << '\n';
    return exit_usage;
}
