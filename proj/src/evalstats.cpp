#include "distlearn/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

#include "distlearn/numerics.hpp"

namespace distlearn {

double f1_macro(const Labels& y_true, const Labels& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("f1_macro: length mismatch");
    if (n_classes < 1) throw std::invalid_argument("f1_macro: n_classes must be positive");
    const auto C = static_cast<std::size_t>(n_classes);
    std::vector<double> tp(C, 0), fp(C, 0), fn(C, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto t = static_cast<std::size_t>(y_true[i]), p = static_cast<std::size_t>(y_pred[i]);
        if (t >= C || p >= C) throw std::invalid_argument("f1_macro: label out of range");
        if (t == p) {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn[t] += 1;
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        const double denom = 2 * tp[c] + fp[c] + fn[c];
        sum += denom > 0 ? 2 * tp[c] / denom : 0.0;
    }
    return sum / static_cast<double>(C);
}

double accuracy(const Labels& y_true, const Labels& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty()) throw std::invalid_argument("accuracy: bad lengths");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) ok += y_true[i] == y_pred[i];
    return static_cast<double>(ok) / static_cast<double>(y_true.size());
}

RankTable RankTable::select_methods(std::span<const std::size_t> cols) const {
    RankTable out;
    out.rows = rows;
    out.orientation = orientation;
    out.values = Matrix(values.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.methods.push_back(methods.at(cols[j]));
        for (std::size_t i = 0; i < values.rows(); ++i) out.values(i, j) = values(i, cols[j]);
    }
    return out;
}

namespace {

// Average ranks of `v` in ascending order, doubled so they stay integral.
std::vector<long> doubled_ranks_ascending(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<long> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        // positions i..j (0-based) share rank ((i+1)+(j+1))/2
        const long doubled = static_cast<long>(i + j + 2);
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = doubled;
        i = j + 1;
    }
    return r;
}

std::vector<long> doubled_row_ranks(std::span<const double> row, Orientation o) {
    std::vector<double> key(row.begin(), row.end());
    if (o == Orientation::higher_better)
        for (auto& x : key) x = -x;
    return doubled_ranks_ascending(key);
}

double tie_term(std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    double term = 0.0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        term += t * t * t - t;
        i = j + 1;
    }
    return term;
}

std::uint64_t factorial(std::size_t k) {
    std::uint64_t f = 1;
    for (std::size_t i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

std::vector<double> rank_row(std::span<const double> row, Orientation orientation) {
    auto d = doubled_row_ranks(row, orientation);
    std::vector<double> r(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) r[i] = 0.5 * static_cast<double>(d[i]);
    return r;
}

std::vector<double> mean_ranks(const RankTable& t) {
    const std::size_t n = t.values.rows(), k = t.values.cols();
    std::vector<double> mr(k, 0.0);
    if (n == 0) return mr;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = rank_row(t.values.row(i), t.orientation);
        for (std::size_t j = 0; j < k; ++j) mr[j] += r[j];
    }
    for (auto& v : mr) v /= static_cast<double>(n);
    return mr;
}

TestResult friedman_test(const RankTable& table, std::span<const std::size_t> methods, const FriedmanOptions& opt) {
    std::vector<std::size_t> cols(methods.begin(), methods.end());
    if (cols.empty()) {
        cols.resize(table.methods.size());
        std::iota(cols.begin(), cols.end(), 0);
    }
    const RankTable t = table.select_methods(cols);
    const std::size_t n = t.values.rows(), k = t.values.cols();
    if (k < 2) throw std::invalid_argument("friedman_test: need at least 2 methods");
    if (n < 2) throw std::invalid_argument("friedman_test: need at least 2 rows");

    // Doubled ranks: R2_j = 2 R_j. The statistic is proportional to
    // S2 = sum_j (R2_j - n(k+1))^2, an integer, so exact tail counts are exact.
    std::vector<std::vector<long>> ranks(n);
    double ties = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ranks[i] = doubled_row_ranks(t.values.row(i), t.orientation);
        ties += tie_term(t.values.row(i));
    }
    const long center = static_cast<long>(n * (k + 1));
    auto s2_of = [&](const std::vector<long>& sums) {
        long s = 0;
        for (long r : sums) s += (r - center) * (r - center);
        return s;
    };
    std::vector<long> obs(k, 0);
    for (const auto& r : ranks)
        for (std::size_t j = 0; j < k; ++j) obs[j] += r[j];
    const long s2_obs = s2_of(obs);

    TestResult res;
    res.n_effective = n;
    res.tie_corrected = ties > 0.0;
    const double nk = static_cast<double>(n), kk = static_cast<double>(k);
    const double denom = nk * kk * (kk + 1.0) - ties / (kk - 1.0);
    if (denom <= 1e-12 * nk * kk * (kk + 1.0) || s2_obs == 0) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.method = PMethod::exact;
        return res;
    }
    // sum_j (R_j - n(k+1)/2)^2 = S2 / 4
    res.statistic = 12.0 * (static_cast<double>(s2_obs) / 4.0) / denom;

    if (n <= opt.exact_max_rows && k <= opt.exact_max_methods) {
        // Distribution of rank-sum vectors under independent uniform
        // permutations of each row's observed ranks.
        std::map<std::vector<long>, std::uint64_t> dist{{std::vector<long>(k, 0), 1}};
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<long> perm = ranks[i];
            std::vector<std::size_t> pidx(k);
            std::iota(pidx.begin(), pidx.end(), 0);
            std::vector<std::vector<long>> arrangements;
            do {
                std::vector<long> a(k);
                for (std::size_t j = 0; j < k; ++j) a[j] = perm[pidx[j]];
                arrangements.push_back(std::move(a));
            } while (std::next_permutation(pidx.begin(), pidx.end()));
            std::map<std::vector<long>, std::uint64_t> next;
            for (const auto& [sums, count] : dist)
                for (const auto& a : arrangements) {
                    std::vector<long> s = sums;
                    for (std::size_t j = 0; j < k; ++j) s[j] += a[j];
                    next[s] += count;
                }
            dist = std::move(next);
        }
        std::uint64_t hits = 0, total = 1;
        const std::uint64_t kf = factorial(k);
        for (std::size_t i = 0; i < n; ++i) total *= kf;
        for (const auto& [sums, count] : dist)
            if (s2_of(sums) >= s2_obs) hits += count;
        res.p_value = static_cast<double>(hits) / static_cast<double>(total);
        res.method = PMethod::exact;
    } else {
        res.p_value = chi2_sf(res.statistic, static_cast<int>(k - 1));
        res.method = PMethod::asymptotic;
    }
    return res;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, const WilcoxonOptions& opt) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("wilcoxon_signed_rank: need equal non-empty lengths");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];

    std::vector<double> ranked;  // values whose magnitudes are ranked
    if (opt.zeros == ZeroMethod::drop) {
        for (double d : diff)
            if (d != 0.0) ranked.push_back(d);
    } else {
        ranked = diff;
    }
    std::vector<double> mags(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) mags[i] = std::fabs(ranked[i]);
    const auto r2 = doubled_ranks_ascending(mags);

    std::vector<long> signed_ranks;  // doubled ranks of nonzero differences
    long wplus2 = 0, wminus2 = 0;
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i] == 0.0) {
            ++zeros;
            continue;
        }
        signed_ranks.push_back(r2[i]);
        (ranked[i] > 0 ? wplus2 : wminus2) += r2[i];
    }
    TestResult res;
    const std::size_t n = signed_ranks.size();
    res.n_effective = n;
    if (n == 0) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.method = PMethod::exact;
        return res;
    }
    const long total2 = wplus2 + wminus2;
    const long w2 = std::min(wplus2, wminus2);
    res.statistic = 0.5 * static_cast<double>(w2);
    const double tie_sum = tie_term(mags);
    res.tie_corrected = tie_sum > 0.0;

    if (n <= opt.exact_max_n) {
        // counts[s] = number of sign patterns with doubled W+ equal to s
        std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
        counts[0] = 1.0;
        long reach = 0;
        for (long r : signed_ranks) {
            for (long s = reach; s >= 0; --s)
                if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
            reach += r;
        }
        double hits = 0.0;
        for (long s = 0; s <= total2; ++s)
            if (std::min(s, total2 - s) <= w2) hits += counts[static_cast<std::size_t>(s)];
        res.p_value = std::min(1.0, hits / std::ldexp(1.0, static_cast<int>(n)));
        res.method = PMethod::exact;
        return res;
    }

    const double nn = static_cast<double>(n + zeros), nz = static_cast<double>(zeros);
    const double mean = (nn * (nn + 1.0) - nz * (nz + 1.0)) / 4.0;
    double var = (nn * (nn + 1.0) * (2.0 * nn + 1.0) - nz * (nz + 1.0) * (2.0 * nz + 1.0)) / 24.0 - tie_sum / 48.0;
    const double wplus = 0.5 * static_cast<double>(wplus2);
    const double z = var > 0.0 ? std::max(0.0, std::fabs(wplus - mean) - 0.5) / std::sqrt(var) : 0.0;
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    res.method = PMethod::asymptotic;
    return res;
}

double t_critical_975(std::size_t df) {
    static constexpr double table[] = {0,      12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281,
                                       2.2010, 2.1788,  2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860,
                                       2.0796, 2.0739,  2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423};
    if (df == 0) return std::numeric_limits<double>::infinity();
    if (df <= 30) return table[df];
    return 1.959964;
}

}  // namespace distlearn
