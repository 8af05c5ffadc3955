#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// They share no code with the library beyond the Matrix container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "distlearn/matrix.hpp"

namespace oracle {

// Twice the average rank of every entry (ascending), computed by counting.
inline std::vector<long> doubled_average_ranks(std::span<const double> v) {
    std::vector<long> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        long less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 2 * less + equal + 1;
    }
    return r;
}

// Exact two-sided signed-rank p by visiting all 2^n sign patterns of the
// nonzero differences a - b.
inline double wilcoxon_enumerated_p(std::span<const double> a, std::span<const double> b) {
    std::vector<double> mags;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0) mags.push_back(std::fabs(a[i] - b[i]));
    std::vector<bool> positive;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0) positive.push_back(a[i] - b[i] > 0.0);
    const std::size_t n = mags.size();
    if (n == 0) return 1.0;
    const auto r = doubled_average_ranks(mags);
    const long total = std::accumulate(r.begin(), r.end(), 0L);
    long wplus = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (positive[i]) wplus += r[i];
    const long w = std::min(wplus, total - wplus);
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        long s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) s += r[i];
        hits += std::min(s, total - s) <= w;
    }
    return static_cast<double>(hits) / static_cast<double>(std::uint64_t{1} << n);
}

// Exact Friedman p by visiting every combination of within-row rank
// permutations, (k!)^n in total. Larger values are better.
inline double friedman_enumerated_p(const distlearn::Matrix& t) {
    const std::size_t n = t.rows(), k = t.cols();
    std::vector<std::vector<long>> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> neg(k);
        for (std::size_t j = 0; j < k; ++j) neg[j] = -t(i, j);
        ranks[i] = doubled_average_ranks(neg);
    }
    auto spread = [&](const std::vector<long>& sums) {
        long s = 0;
        for (long v : sums) s += v * v;
        return s;
    };
    std::vector<std::vector<std::vector<long>>> arrangements(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> p(k);
        std::iota(p.begin(), p.end(), 0);
        do {
            std::vector<long> a(k);
            for (std::size_t j = 0; j < k; ++j) a[j] = ranks[i][p[j]];
            arrangements[i].push_back(a);
        } while (std::next_permutation(p.begin(), p.end()));
    }
    std::vector<long> observed(k, 0);
    for (const auto& r : ranks)
        for (std::size_t j = 0; j < k; ++j) observed[j] += r[j];
    const long obs = spread(observed);

    std::uint64_t hits = 0, total = 0;
    std::vector<std::size_t> choice(n, 0);
    for (;;) {
        std::vector<long> sums(k, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) sums[j] += arrangements[i][choice[i]][j];
        hits += spread(sums) >= obs;
        ++total;
        std::size_t i = 0;
        while (i < n && ++choice[i] == arrangements[i].size()) choice[i++] = 0;
        if (i == n) break;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

// Exact Friedman p for tie-free tables from the null distribution of the
// column rank-sum vector, built row by row. Larger values are better.
inline double friedman_rank_sum_dp_p(const distlearn::Matrix& t) {
    const std::size_t n = t.rows(), k = t.cols();
    std::vector<long> observed(k, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            long r = 1;
            for (std::size_t q = 0; q < k; ++q) r += t(i, q) > t(i, j);
            observed[j] += r;
        }
    std::vector<long> base(k);
    std::iota(base.begin(), base.end(), 1L);
    std::vector<std::vector<long>> perms;
    do perms.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));

    std::map<std::vector<long>, std::uint64_t> dist{{std::vector<long>(k, 0), 1}};
    for (std::size_t i = 0; i < n; ++i) {
        std::map<std::vector<long>, std::uint64_t> next;
        for (const auto& [sums, count] : dist)
            for (const auto& p : perms) {
                auto s2 = sums;
                for (std::size_t j = 0; j < k; ++j) s2[j] += p[j];
                next[s2] += count;
            }
        dist = std::move(next);
    }
    auto spread = [](const std::vector<long>& v) {
        long s = 0;
        for (long x : v) s += x * x;
        return s;
    };
    const long obs = spread(observed);
    std::uint64_t hits = 0, total = 0;
    for (const auto& [sums, count] : dist) {
        total += count;
        if (spread(sums) >= obs) hits += count;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

// Mean squared distance of every point to the mean of its group.
inline double partition_cost(const distlearn::Matrix& X, std::span<const int> group, int k) {
    const std::size_t d = X.cols();
    std::vector<double> sum(static_cast<std::size_t>(k) * d, 0.0);
    std::vector<double> count(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        count[group[i]] += 1;
        for (std::size_t j = 0; j < d; ++j) sum[group[i] * d + j] += X(i, j);
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double m = sum[group[i] * d + j] / count[group[i]];
            cost += (X(i, j) - m) * (X(i, j) - m);
        }
    return cost / static_cast<double>(X.rows());
}

// Lowest cost over all partitions into at most k groups, enumerated as
// restricted growth strings.
inline double optimal_partition_cost(const distlearn::Matrix& X, int k) {
    const std::size_t n = X.rows();
    std::vector<int> g(n, 0);
    double best = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, std::size_t i, int used) -> void {
        if (i == n) {
            best = std::min(best, partition_cost(X, g, k));
            return;
        }
        for (int c = 0; c <= std::min(used, k - 1); ++c) {
            g[i] = c;
            self(self, i + 1, std::max(used, c + 1));
        }
    };
    rec(rec, 0, 0);
    return best;
}

// Relative error ||a - b|| / max(||a||, ||b||, tiny).
inline double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

// ||fd - analytic|| / ||fd||, where fd holds central differences of f over every entry of `at`.
template <typename F>
double gradient_error(distlearn::Matrix& at, const distlearn::Matrix& analytic, F f, double h = 1e-6) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < at.data().size(); ++k) {
        const double keep = at.data()[k];
        at.data()[k] = keep + h;
        const double up = f();
        at.data()[k] = keep - h;
        const double down = f();
        at.data()[k] = keep;
        const double fd = (up - down) / (2 * h);
        num += (fd - analytic.data()[k]) * (fd - analytic.data()[k]);
        den += fd * fd;
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace oracle
