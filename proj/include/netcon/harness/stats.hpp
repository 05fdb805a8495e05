#pragma once

// Aggregation of trial reports and scaling-law ratio tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "netcon/engine.hpp"

namespace netcon {

struct AggregateStats {
    std::string protocol;
    std::uint64_t n = 0;
    std::size_t k = 0;       // strand length, replication only
    std::size_t copies = 0;  // strands wanted, replication only
    std::size_t trials = 0;
    std::size_t successes = 0;
    double success_rate = 0;
    // Parallel time over successful trials; NaN when there are none.
    double mean = 0;
    double median = 0;
    double p95 = 0;
    double max = 0;
    std::map<std::string, double> normalized;  // mean / normalizer(n, k, l)
};

/// Quantile with linear interpolation between order statistics
/// (position p * (N - 1) in the sorted sample).
inline double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (p < 0 || p > 1) throw std::invalid_argument("quantile: p must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Normalizer {
    std::string name;
    double (*fn)(double n, double k, double l);
};

inline const std::vector<Normalizer>& normalizers() {
    static const std::vector<Normalizer> all = {
        {"1", [](double, double, double) { return 1.0; }},
        {"n", [](double n, double, double) { return n; }},
        {"n_ln_n", [](double n, double, double) { return n * std::log(n); }},
        {"n_k_ln_n", [](double n, double k, double) { return n * (k + std::log(n)); }},
        {"n_k_ln_n_ln_l", [](double n, double k, double l) { return n * (k + std::log(n)) * std::log(l); }},
    };
    return all;
}

inline const Normalizer& find_normalizer(const std::string& name) {
    for (const auto& nz : normalizers())
        if (nz.name == name) return nz;
    throw std::invalid_argument("unknown normalizer '" + name + "' (1, n, n_ln_n, n_k_ln_n, n_k_ln_n_ln_l)");
}

inline double normalize(const Normalizer& nz, const AggregateStats& s) {
    return nz.fn(static_cast<double>(s.n), static_cast<double>(s.k), static_cast<double>(s.copies));
}

namespace detail {

inline std::size_t summary_size(const TrialReport& r, const char* key) {
    auto it = r.summary.find(key);
    return it == r.summary.end() ? 0 : static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace detail

/// Groups by (n, k, copies) in ascending order. Statistics of parallel time
/// are taken over successful trials; the success rate counts all of them.
inline std::vector<AggregateStats> aggregate(const std::vector<TrialReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    using Key = std::tuple<std::uint64_t, std::size_t, std::size_t>;
    std::map<Key, std::vector<const TrialReport*>> groups;
    for (const auto& r : reports)
        groups[{r.n, detail::summary_size(r, "k"), detail::summary_size(r, "copies")}].push_back(&r);

    std::vector<AggregateStats> out;
    for (const auto& [key, group] : groups) {
        AggregateStats s;
        s.protocol = group.front()->protocol;
        std::tie(s.n, s.k, s.copies) = key;
        s.trials = group.size();
        std::vector<double> times;
        for (const auto* r : group)
            if (r->success) times.push_back(r->parallel_time.to_double());
        s.successes = times.size();
        s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.trials);
        if (times.empty()) {
            s.mean = s.median = s.p95 = s.max = std::numeric_limits<double>::quiet_NaN();
        } else {
            double sum = 0;
            for (double t : times) sum += t;
            s.mean = sum / static_cast<double>(times.size());
            s.median = quantile(times, 0.5);
            s.p95 = quantile(times, 0.95);
            s.max = *std::max_element(times.begin(), times.end());
        }
        for (const auto& nz : normalizers()) {
            if (nz.name == "n_k_ln_n" && s.k == 0) continue;
            if (nz.name == "n_k_ln_n_ln_l" && s.copies < 2) continue;
            s.normalized[nz.name] = s.mean / normalize(nz, s);
        }
        out.push_back(std::move(s));
    }
    return out;
}

struct ScalingRow {
    std::uint64_t n = 0;
    std::size_t k = 0;
    std::size_t copies = 0;
    std::string normalizer;
    double ratio = 0;     // mean parallel time / normalizer
    double relative = 0;  // ratio / smallest ratio on the grid
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double flatness = 0;  // largest ratio / smallest ratio
};

/// Ratio of mean parallel time to a normalizer across a grid of at least
/// three points. Some coordinate (n, k or copies) must span a factor of four
/// or more; n may be derived from the others, as in n = 4lk + 64.
inline ScalingTable scaling_table(const std::vector<AggregateStats>& stats, const std::string& normalizer) {
    const auto& nz = find_normalizer(normalizer);
    if (stats.size() < 3) throw std::invalid_argument("scaling_table: need at least 3 grid points");
    auto span = [&](auto field) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0;
        for (const auto& s : stats) {
            lo = std::min(lo, static_cast<double>(field(s)));
            hi = std::max(hi, static_cast<double>(field(s)));
        }
        return lo > 0 ? hi / lo : 0.0;
    };
    const double n_span = span([](const AggregateStats& s) { return s.n; });
    const double k_span = span([](const AggregateStats& s) { return s.k; });
    const double l_span = span([](const AggregateStats& s) { return s.copies; });
    const double grid_span = std::max({n_span, k_span, l_span});
    if (grid_span < 4) throw std::invalid_argument("scaling_table: grid must span at least a factor of 4");

    ScalingTable table;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0;
    for (const auto& s : stats) {
        if (s.successes == 0) throw std::invalid_argument("scaling_table: grid point without successful trials");
        ScalingRow row{s.n, s.k, s.copies, nz.name, s.mean / normalize(nz, s), 0};
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
        table.rows.push_back(row);
    }
    for (auto& row : table.rows) row.relative = row.ratio / lo;
    table.flatness = hi / lo;
    return table;
}

}  // namespace netcon
