#pragma once

// Probabilistic bubble-sort: each comparison picks an adjacent index pair
// uniformly at random and fixes it if inverted.
//
// The analysis works on zero-one sequences. A configuration C is the set of
// positions holding a one; its potential is
//
//     P(C) = sum over i in C of  2^(n - k + 2l - i) - 2^l,   l = |C ∩ [0, i)|,
//
// which is zero exactly for sorted sequences and shrinks by a factor of at
// least 1 - 1/(4(n-1)) per comparison in expectation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "netcon/rng.hpp"

namespace netcon {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Compares positions j and j+1 and swaps them if out of order. Returns
/// whether a swap happened.
template <class T>
bool compare_swap(std::span<T> values, std::size_t j) {
    if (values.size() < 2 || j > values.size() - 2)
        throw std::out_of_range("compare_swap: index " + std::to_string(j) + " out of range");
    if (values[j] > values[j + 1]) {
        std::swap(values[j], values[j + 1]);
        return true;
    }
    return false;
}

inline bool compare_swap(std::vector<std::int64_t>& values, std::size_t j) {
    return compare_swap(std::span<std::int64_t>(values), j);
}

/// 4(n-1)(n ln 2 + eta ln n), rounded up.
inline std::uint64_t comparison_bound(std::uint64_t n, double eta) {
    if (n < 2) throw std::invalid_argument("comparison_bound: n must be >= 2");
    if (!(eta > 0)) throw std::invalid_argument("comparison_bound: eta must be positive");
    const double nd = static_cast<double>(n);
    return static_cast<std::uint64_t>(std::ceil(4.0 * (nd - 1) * (nd * std::log(2.0) + eta * std::log(nd))));
}

struct SortReport {
    std::uint64_t comparisons = 0;
    std::uint64_t swaps = 0;
    bool sorted = false;
    std::uint64_t bound = 0;
    bool within_bound = false;
};

/// Sorts `values` in place by random adjacent comparisons until sorted or
/// `budget` comparisons were spent. Every draw counts as one comparison.
inline SortReport prob_bubble_sort(std::vector<std::int64_t>& values, SchedulerRng& rng, std::uint64_t budget,
                                   double eta = 2.0) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("prob_bubble_sort: need at least 2 values");
    SortReport report;
    report.bound = comparison_bound(n, eta);

    // Number of adjacent descents; zero iff sorted. A swap at j only changes
    // the descents at j-1, j and j+1.
    auto descent = [&](std::size_t j) -> int { return values[j] > values[j + 1] ? 1 : 0; };
    std::size_t descents = 0;
    for (std::size_t j = 0; j + 1 < n; ++j) descents += descent(j);

    while (descents > 0 && report.comparisons < budget) {
        const std::size_t j = rng.uniform_below(n - 1);
        ++report.comparisons;
        if (values[j] <= values[j + 1]) continue;
        const std::size_t lo = j == 0 ? 0 : j - 1;
        const std::size_t hi = std::min(j + 1, n - 2);
        for (std::size_t t = lo; t <= hi; ++t) descents -= descent(t);
        std::swap(values[j], values[j + 1]);
        ++report.swaps;
        for (std::size_t t = lo; t <= hi; ++t) descents += descent(t);
    }
    report.sorted = descents == 0;
    report.within_bound = report.comparisons <= report.bound;
    return report;
}

/// Positions of the ones in a zero-one sequence of length n.
struct ZeroOneConfig {
    std::size_t n = 0;
    std::vector<std::size_t> ones;  // strictly increasing

    ZeroOneConfig() = default;
    ZeroOneConfig(std::size_t length, std::vector<std::size_t> positions) : n(length), ones(std::move(positions)) {
        std::sort(ones.begin(), ones.end());
        if (std::adjacent_find(ones.begin(), ones.end()) != ones.end())
            throw std::invalid_argument("ZeroOneConfig: duplicate position");
        if (!ones.empty() && ones.back() >= n) throw std::invalid_argument("ZeroOneConfig: position out of range");
    }

    /// Bit i of `mask` is position i.
    static ZeroOneConfig from_mask(std::size_t length, std::uint64_t mask) {
        std::vector<std::size_t> positions;
        for (std::size_t i = 0; i < length; ++i)
            if ((mask >> i) & 1U) positions.push_back(i);
        return {length, std::move(positions)};
    }

    static ZeroOneConfig from_values(std::span<const std::int64_t> values) {
        std::vector<std::size_t> positions;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] != 0 && values[i] != 1) throw std::invalid_argument("ZeroOneConfig: values must be 0/1");
            if (values[i] == 1) positions.push_back(i);
        }
        return {values.size(), std::move(positions)};
    }

    std::size_t k() const noexcept { return ones.size(); }

    std::vector<std::int64_t> values() const {
        std::vector<std::int64_t> out(n, 0);
        for (auto i : ones) out[i] = 1;
        return out;
    }

    /// All ones at the last k positions.
    bool is_sorted() const noexcept {
        for (std::size_t t = 0; t < ones.size(); ++t)
            if (ones[t] != n - ones.size() + t) return false;
        return true;
    }

    friend bool operator==(const ZeroOneConfig&, const ZeroOneConfig&) = default;
};

inline BigInt pow2(std::size_t e) {
    BigInt r = 1;
    r <<= e;
    return r;
}

/// Exact P(C).
inline BigInt potential(const ZeroOneConfig& c) {
    const std::size_t k = c.k();
    BigInt total = 0;
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t i = c.ones[l];  // l ones precede position i
        total += pow2(c.n - k + 2 * l - i) - pow2(l);
    }
    return total;
}

/// Configuration after compare_swap at index j.
inline ZeroOneConfig step(const ZeroOneConfig& c, std::size_t j) {
    auto values = c.values();
    compare_swap(values, j);
    return ZeroOneConfig::from_values(values);
}

/// E[P(C')] over the n-1 equally likely comparison indices, exactly.
inline BigRational exact_expected_next_potential(const ZeroOneConfig& c) {
    if (c.n < 2) throw std::invalid_argument("exact_expected_next_potential: n must be >= 2");
    BigInt sum = 0;
    for (std::size_t j = 0; j + 1 < c.n; ++j) sum += potential(step(c, j));
    return BigRational(sum, BigInt(c.n - 1));
}

/// 1 - 1/(4(n-1)).
inline BigRational contraction_factor(std::size_t n) {
    const BigInt d = 4 * BigInt(n - 1);
    return BigRational(d - 1, d);
}

/// Zero-one projections for k = 0..n: the k largest values become ones.
/// Among equal values the later position counts as larger.
inline std::vector<ZeroOneConfig> zero_one_projections(std::span<const std::int64_t> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] != values[b] ? values[a] < values[b] : a < b;
    });
    std::vector<ZeroOneConfig> out;
    out.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        out.emplace_back(n, std::vector<std::size_t>(order.end() - static_cast<std::ptrdiff_t>(k), order.end()));
    return out;
}

}  // namespace netcon
