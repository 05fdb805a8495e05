#pragma once

// Seeded sweeps over a grid of population sizes.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "netcon/engine.hpp"
#include "netcon/harness/runners.hpp"
#include "netcon/rng.hpp"

namespace netcon {

struct SweepSpec {
    std::string protocol;
    std::vector<std::size_t> n_values;
    std::size_t trials = 1;
    std::uint64_t master_seed = 1;
    TrialSettings settings;
    unsigned threads = 1;

    void validate() const {
        find_protocol(protocol);
        if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
        if (n_values.empty()) throw std::invalid_argument("sweep: no population sizes given");
        for (auto n : n_values)
            if (n < 2) throw std::invalid_argument("sweep: every n must be >= 2");
        settings.clock.validate();
        if (!(settings.budget_factor > 0)) throw std::invalid_argument("sweep: budget factor must be positive");
    }

    /// Effective parameters, echoed into result metadata.
    std::map<std::string, std::string> describe() const {
        std::string ns;
        for (auto n : n_values) ns += (ns.empty() ? "" : " ") + std::to_string(n);
        std::map<std::string, std::string> m = {
            {"protocol", protocol},
            {"n_values", ns},
            {"trials", std::to_string(trials)},
            {"master_seed", std::to_string(master_seed)},
            {"max", std::to_string(settings.clock.max_level)},
            {"d", std::to_string(settings.clock.d_slack)},
            {"eta", format_double(settings.eta)},
            {"budget_factor", format_double(settings.budget_factor)},
            {"extension", format_double(settings.extension)},
        };
        if (protocol == "replication") {
            m["copies"] = std::to_string(settings.copies);
            if (settings.bits.empty()) m["k"] = std::to_string(settings.k);
            else m["bits"] = settings.bits;
        }
        if (protocol == "bubble-sort") m["dist"] = settings.dist;
        return m;
    }
};

/// Sub-seed of trial `trial` at population size n.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::uint64_t trial) {
    return derive_seed(master, {static_cast<std::uint64_t>(n), trial});
}

/// Applies a JSON document of the form
///   {"protocol": ..., "nValues": [...], "trials": ..., "masterSeed": ...,
///    "params": {"max", "d", "eta", "bits", "k", "copies", "budgetFactor", "dist", "extension"},
///    "threads": ...}
/// onto `spec`. Absent keys leave the current values alone.
inline void apply_sweep_json(SweepSpec& spec, const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("sweep config must be a JSON object");
    static const std::vector<std::string> top = {"protocol", "nValues", "trials", "masterSeed", "params", "threads"};
    static const std::vector<std::string> params = {"max", "d", "eta", "bits", "k", "copies", "budgetFactor",
                                                    "dist", "extension"};
    for (const auto& [key, value] : j.items())
        if (std::find(top.begin(), top.end(), key) == top.end())
            throw std::invalid_argument("sweep config: unknown key '" + key + "'");
    if (j.contains("protocol")) spec.protocol = j["protocol"].get<std::string>();
    if (j.contains("nValues")) spec.n_values = j["nValues"].get<std::vector<std::size_t>>();
    if (j.contains("trials")) spec.trials = j["trials"].get<std::size_t>();
    if (j.contains("masterSeed")) spec.master_seed = j["masterSeed"].get<std::uint64_t>();
    if (j.contains("threads")) spec.threads = j["threads"].get<unsigned>();
    if (!j.contains("params")) return;
    const auto& p = j["params"];
    for (const auto& [key, value] : p.items())
        if (std::find(params.begin(), params.end(), key) == params.end())
            throw std::invalid_argument("sweep config: unknown param '" + key + "'");
    auto& s = spec.settings;
    if (p.contains("max")) s.clock.max_level = p["max"].get<int>();
    if (p.contains("d")) s.clock.d_slack = p["d"].get<int>();
    if (p.contains("eta")) s.eta = p["eta"].get<double>();
    if (p.contains("bits")) s.bits = p["bits"].get<std::string>();
    if (p.contains("k")) s.k = p["k"].get<std::size_t>();
    if (p.contains("copies")) s.copies = p["copies"].get<std::size_t>();
    if (p.contains("budgetFactor")) s.budget_factor = p["budgetFactor"].get<double>();
    if (p.contains("dist")) s.dist = p["dist"].get<std::string>();
    if (p.contains("extension")) s.extension = p["extension"].get<double>();
}

inline void load_sweep_config(SweepSpec& spec, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    try {
        apply_sweep_json(spec, nlohmann::json::parse(in));
    } catch (const std::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

/// One-line description of a trial that ran out of budget.
inline std::string budget_exhausted_line(const TrialReport& r) {
    std::string line = "budget exhausted: " + r.protocol + " n=" + std::to_string(r.n) + " trial=" +
                       std::to_string(r.trial) + " seed=" + std::to_string(r.seed) +
                       " interactions=" + std::to_string(r.interactions);
    for (const auto& [key, value] : r.summary) line += " " + key + "=" + value;
    return line;
}

/// Runs every (n, trial) of `spec`. Reports come back sorted by
/// (n, trial) whatever the thread count; trials exhausting their budget are
/// logged to `log` when given. Tracing forces a single thread.
inline std::vector<TrialReport> run_sweep(const SweepSpec& spec, std::ostream* log = nullptr) {
    spec.validate();
    struct Job {
        std::size_t n;
        std::uint64_t trial;
    };
    std::vector<Job> jobs;
    for (auto n : spec.n_values)
        for (std::uint64_t t = 0; t < spec.trials; ++t) jobs.push_back({n, t});
    std::sort(jobs.begin(), jobs.end(),
              [](const Job& a, const Job& b) { return a.n != b.n ? a.n < b.n : a.trial < b.trial; });

    std::vector<TrialReport> reports(jobs.size());
    auto work = [&](std::size_t i) {
        const auto& job = jobs[i];
        if (spec.settings.trace)
            *spec.settings.trace << "# " << spec.protocol << " n=" << job.n << " trial=" << job.trial
                                 << " seed=" << trial_seed(spec.master_seed, job.n, job.trial) << '\n';
        reports[i] = run_trial(spec.protocol, job.n, job.trial, trial_seed(spec.master_seed, job.n, job.trial),
                               spec.settings);
    };

    const unsigned threads = spec.settings.trace ? 1U : std::max(1U, spec.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    try {
                        work(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    if (log)
        for (const auto& r : reports)
            if (r.stop_reason == StopReason::budget_exhausted) *log << budget_exhausted_line(r) << '\n';
    return reports;
}

}  // namespace netcon
