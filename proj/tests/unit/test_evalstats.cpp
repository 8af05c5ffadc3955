#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "../support/oracles.hpp"
#include "distlearn/evalstats.hpp"
#include "distlearn/numerics.hpp"
#include "doctest.h"

using namespace distlearn;

namespace {

RankTable table_of(const Matrix& v, Orientation o = Orientation::higher_better) {
    RankTable t;
    t.values = v;
    t.orientation = o;
    for (std::size_t i = 0; i < v.rows(); ++i) t.rows.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < v.cols(); ++j) t.methods.push_back("m" + std::to_string(j));
    return t;
}

}  // namespace

TEST_SUITE("evalstats") {
    TEST_CASE("f1 macro examples") {
        const Labels y{0, 1, 2, 1, 0};
        CHECK(f1_macro(y, y, 3) == 1.0);
        const Labels bal{0, 0, 1, 1};
        CHECK(f1_macro(bal, Labels{0, 0, 0, 0}, 2) == doctest::Approx(1.0 / 3.0));

        // Confusion (rows true, cols predicted): [[3,1,0],[1,2,1],[0,0,2]].
        const Labels t{0, 0, 0, 0, 1, 1, 1, 1, 2, 2};
        const Labels p{0, 0, 0, 1, 0, 1, 1, 2, 2, 2};
        // Class F1: 2*3/(6+1+1) = 0.75, 2*2/(4+1+2) = 4/7, 2*2/(4+1+0) = 0.8
        CHECK(f1_macro(t, p, 3) == doctest::Approx((0.75 + 4.0 / 7.0 + 0.8) / 3.0));
    }

    TEST_CASE("f1 macro is invariant under a consistent class relabelling") {
        Rng r(1);
        for (int k = 0; k < 50; ++k) {
            Labels t(30), p(30);
            for (auto& v : t) v = static_cast<int>(r.index(4));
            for (auto& v : p) v = static_cast<int>(r.index(4));
            std::vector<int> perm{0, 1, 2, 3};
            r.shuffle(perm);
            Labels t2(30), p2(30);
            for (std::size_t i = 0; i < 30; ++i) t2[i] = perm[t[i]], p2[i] = perm[p[i]];
            CHECK(f1_macro(t, p, 4) == doctest::Approx(f1_macro(t2, p2, 4)).epsilon(1e-15));
        }
    }

    TEST_CASE("mean ranks examples") {
        Matrix same{{1, 1, 1}, {2, 2, 2}};
        for (double v : mean_ranks(table_of(same))) CHECK(v == 2.0);
        Matrix best{{3, 1, 2}, {5, 4, 0}};
        CHECK(mean_ranks(table_of(best))[0] == 1.0);
        // Hand ranks (higher better): row0 (1,2,3) row1 (1.5,1.5,3) row2 (3,1,2) row3 (2,3,1)
        Matrix hand{{0.9, 0.5, 0.1}, {0.7, 0.7, 0.2}, {0.1, 0.8, 0.3}, {0.4, 0.2, 0.6}};
        auto mr = mean_ranks(table_of(hand));
        CHECK(mr[0] == doctest::Approx(7.5 / 4));
        CHECK(mr[1] == doctest::Approx(7.5 / 4));
        CHECK(mr[2] == doctest::Approx(9.0 / 4));
        auto low = mean_ranks(table_of(hand, Orientation::lower_better));
        CHECK(low[2] == doctest::Approx(7.0 / 4));
    }

    TEST_CASE("row ranks conserve the rank sum") {
        Rng r(2);
        for (int t = 0; t < 200; ++t) {
            const std::size_t k = 2 + r.index(6);
            std::vector<double> row(k);
            for (auto& v : row) v = static_cast<double>(r.index(4));
            auto ranks = rank_row(row, r.uniform() < 0.5 ? Orientation::higher_better : Orientation::lower_better);
            CHECK(std::accumulate(ranks.begin(), ranks.end(), 0.0) == k * (k + 1) / 2.0);
        }
    }

    TEST_CASE("friedman examples") {
        Matrix flat{{1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
        auto z = friedman_test(table_of(flat));
        CHECK(z.statistic == 0.0);
        CHECK(z.p_value == 1.0);

        // Same ordering in all 3 rows: only the 6 uniform choices reach the extreme.
        Matrix fixed{{3, 2, 1}, {3, 2, 1}, {3, 2, 1}};
        auto f = friedman_test(table_of(fixed));
        CHECK(f.method == PMethod::exact);
        CHECK(f.p_value == 6.0 / 216.0);
        CHECK(f.p_value == oracle::friedman_enumerated_p(fixed));
    }

    TEST_CASE("friedman asymptotic statistic matches the formula") {
        Rng r(3);
        Matrix v(10, 3);
        for (auto& x : v.data()) x = r.uniform();
        auto res = friedman_test(table_of(v));
        CHECK(res.method == PMethod::asymptotic);
        const auto mr = mean_ranks(table_of(v));
        double s = 0.0;
        for (double m : mr) s += (m - 2.0) * (m - 2.0);
        const double stat = 12.0 * 10 / (3 * 4) * s;
        CHECK(res.statistic == doctest::Approx(stat).epsilon(1e-9));
        CHECK(res.p_value == doctest::Approx(chi2_sf(stat, 2)).epsilon(1e-12));
    }

    TEST_CASE("friedman exact p equals full enumeration") {
        Rng r(4);
        for (int t = 0; t < 60; ++t) {
            const std::size_t n = 2 + r.index(3);
            Matrix v(n, 3);
            for (auto& x : v.data()) x = static_cast<double>(r.index(4));
            auto res = friedman_test(table_of(v));
            CHECK(res.p_value == oracle::friedman_enumerated_p(v));
        }
    }

    TEST_CASE("friedman exact p at ten rows equals the rank-sum distribution") {
        Rng r(5);
        FriedmanOptions force_exact;
        force_exact.exact_max_rows = 12;
        for (int t = 0; t < 10; ++t) {
            Matrix v(10, 3);
            for (auto& x : v.data()) x = r.uniform();
            auto e = friedman_test(table_of(v), {}, force_exact);
            CHECK(e.method == PMethod::exact);
            CHECK(e.p_value == doctest::Approx(oracle::friedman_rank_sum_dp_p(v)).epsilon(1e-12));
        }
    }

    TEST_CASE("friedman exact and asymptotic agree in the tail at ten rows") {
        Rng r(15);
        FriedmanOptions force_exact;
        force_exact.exact_max_rows = 12;
        FriedmanOptions force_asym;
        force_asym.exact_max_rows = 0;
        int tail = 0;
        for (int t = 0; t < 40; ++t) {
            Matrix v(10, 3);
            for (std::size_t i = 0; i < 10; ++i)
                for (std::size_t j = 0; j < 3; ++j) v(i, j) = r.uniform() + 0.4 * static_cast<double>(j);
            auto e = friedman_test(table_of(v), {}, force_exact);
            auto a = friedman_test(table_of(v), {}, force_asym);
            if (a.p_value > 0.1) continue;
            ++tail;
            CHECK(std::fabs(e.p_value - a.p_value) < 0.02);
        }
        CHECK(tail >= 20);
    }

    TEST_CASE("wilcoxon examples") {
        const std::vector<double> a{1, 2, 3}, zeros{0, 0, 0};
        auto same = wilcoxon_signed_rank(a, a);
        CHECK(same.p_value == 1.0);
        CHECK(same.statistic == 0.0);
        CHECK(same.n_effective == 0);

        const std::vector<double> d{1, 2, 3, 4, 5}, z5{0, 0, 0, 0, 0};
        auto res = wilcoxon_signed_rank(d, z5);
        CHECK(res.statistic == 0.0);
        CHECK(res.p_value == 2.0 / 32.0);
        CHECK(res.method == PMethod::exact);
    }

    TEST_CASE("wilcoxon exact p equals sign enumeration") {
        Rng r(6);
        for (int t = 0; t < 100; ++t) {
            const std::size_t n = 1 + r.index(12);
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = static_cast<double>(r.index(7));
                b[i] = static_cast<double>(r.index(7));
            }
            CHECK(wilcoxon_signed_rank(a, b).p_value == oracle::wilcoxon_enumerated_p(a, b));
        }
    }

    TEST_CASE("wilcoxon exact and asymptotic agree at n = 30") {
        Rng r(7);
        WilcoxonOptions exact;
        exact.exact_max_n = 40;
        for (int t = 0; t < 10; ++t) {
            std::vector<double> a(30), b(30);
            for (std::size_t i = 0; i < 30; ++i) {
                a[i] = r.normal() + 0.6;
                b[i] = r.normal();
            }
            auto e = wilcoxon_signed_rank(a, b, exact);
            auto s = wilcoxon_signed_rank(a, b);
            CHECK(e.method == PMethod::exact);
            CHECK(s.method == PMethod::asymptotic);
            CHECK(std::fabs(e.p_value - s.p_value) < 0.005);
        }
    }

    TEST_CASE("wilcoxon p values are probabilities and symmetric") {
        Rng r(8);
        for (int t = 0; t < 100; ++t) {
            const std::size_t n = 1 + r.index(40);
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = r.normal(), b[i] = r.normal();
            auto ab = wilcoxon_signed_rank(a, b), ba = wilcoxon_signed_rank(b, a);
            CHECK(ab.p_value >= 0.0);
            CHECK(ab.p_value <= 1.0);
            CHECK(ab.p_value == ba.p_value);
        }
    }

    TEST_CASE("t critical values") {
        CHECK(t_critical_975(1) == doctest::Approx(12.7062));
        CHECK(t_critical_975(4) == doctest::Approx(2.7764));
        CHECK(t_critical_975(1000) == doctest::Approx(1.96).epsilon(1e-3));
    }
}
