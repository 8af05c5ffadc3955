#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "../support/hand_trees.hpp"
#include "../support/oracles.hpp"
#include "distlearn/evalstats.hpp"
#include "distlearn/learners.hpp"
#include "doctest.h"

using namespace distlearn;

namespace {

double gini(const std::vector<double>& w) {
    const double t = std::accumulate(w.begin(), w.end(), 0.0);
    if (t <= 0) return 0.0;
    double s = 1.0;
    for (double v : w) s -= (v / t) * (v / t);
    return s;
}

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double split_gain(const Matrix& X, const Labels& y, const std::vector<double>& w, int C, std::size_t f, double thr) {
    std::vector<double> all(C, 0.0), l(C, 0.0), r(C, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        all[y[i]] += w[i];
        (X(i, f) <= thr ? l : r)[y[i]] += w[i];
    }
    const double total = std::accumulate(all.begin(), all.end(), 0.0);
    const double wl = std::accumulate(l.begin(), l.end(), 0.0), wr = std::accumulate(r.begin(), r.end(), 0.0);
    return total * gini(all) - wl * gini(l) - wr * gini(r);
}

// Exhaustive search for the largest weighted Gini decrease over midpoints.
BestSplit best_gini_split(const Matrix& X, const Labels& y, const std::vector<double>& w, int C) {
    BestSplit best;
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < X.rows(); ++i) vals.push_back(X(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
            const double thr = 0.5 * (vals[v] + vals[v + 1]);
            const double gain = split_gain(X, y, w, C, f, thr);
            if (gain > best.gain + 1e-12) best = {static_cast<int>(f), thr, gain};
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("learners") {
    TEST_CASE("cart separates a trivially separable line") {
        Matrix X{{0}, {1}, {10}, {11}};
        Labels y{0, 0, 1, 1};
        Rng r(1);
        auto m = cart_fit(X, y, 2, ClassWeighting::none, r);
        CHECK(m.leaf_count() == 2);
        CHECK(f1_macro(y, cart_predict(m, X), 2) == 1.0);
    }

    TEST_CASE("single-leaf cart predicts the weighted majority") {
        Matrix X{{0}, {1}, {2}, {3}, {4}};
        Labels y{1, 1, 1, 0, 0};
        Rng r(1);
        auto m = cart_fit(X, y, 1, ClassWeighting::none, r);
        CHECK(m.leaf_count() == 1);
        for (int v : cart_predict(m, X)) CHECK(v == 1);
        // Balanced weights: class 0 has weight 5/4 per row, class 1 has 5/6.
        auto b = cart_fit(X, y, 1, ClassWeighting::balanced, r);
        const auto& d = b.nodes[0].distribution;
        CHECK(d[0] == doctest::Approx(0.5));
        CHECK(d[1] == doctest::Approx(0.5));
        CHECK(b.nodes[0].label == 0);
    }

    TEST_CASE("balanced cart isolates the minority class at two leaves") {
        Rng gen(2);
        for (int t = 0; t < 20; ++t) {
            Matrix X(10, 2);
            Labels y(10, 0);
            y[9] = 1;
            for (std::size_t i = 0; i < 10; ++i) {
                X(i, 0) = gen.uniform(0, 1);
                X(i, 1) = gen.uniform(0, 1);
            }
            X(9, 0) = 2.0;  // minority separable on feature 0
            const auto w = balanced_class_weights(y, 2);
            std::vector<double> rw(10);
            for (std::size_t i = 0; i < 10; ++i) rw[i] = w[y[i]];
            const auto oracle = best_gini_split(X, y, rw, 2);
            Rng r(3);
            auto m = cart_fit(X, y, 2, ClassWeighting::balanced, r);
            REQUIRE(m.leaf_count() == 2);
            CHECK(m.nodes[0].feature == oracle.feature);
            CHECK(m.nodes[0].threshold == doctest::Approx(oracle.threshold));
            bool minority_pure = false;
            for (const auto& n : m.nodes)
                if (n.is_leaf() && n.distribution[1] == 1.0) minority_pure = true;
            CHECK(minority_pure);
        }
    }

    TEST_CASE("cart root split matches the exhaustive Gini oracle") {
        Rng gen(4);
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 6 + gen.index(7);
            Matrix X(n, 2);
            Labels y(n);
            for (std::size_t i = 0; i < n; ++i) {
                X(i, 0) = std::round(gen.uniform(0, 10));
                X(i, 1) = std::round(gen.uniform(0, 10));
                y[i] = static_cast<int>(gen.index(3));
            }
            const std::vector<double> w(n, 1.0);
            const auto oracle = best_gini_split(X, y, w, 3);
            Rng r(5);
            auto m = cart_fit(X, y, 2, ClassWeighting::none, r, 3);
            if (oracle.feature < 0) {
                CHECK(m.leaf_count() == 1);
                continue;
            }
            REQUIRE_FALSE(m.nodes[0].is_leaf());
            const double gain = split_gain(X, y, w, 3, m.nodes[0].feature, m.nodes[0].threshold);
            CHECK(gain == doctest::Approx(oracle.gain).epsilon(1e-9));
        }
    }

    TEST_CASE("cart splits strictly decrease impurity and respect the leaf cap") {
        Rng gen(6);
        for (int t = 0; t < 30; ++t) {
            const std::size_t n = 40;
            Matrix X(n, 3);
            Labels y(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < 3; ++j) X(i, j) = gen.normal();
                y[i] = X(i, 0) + 0.5 * gen.normal() > 0 ? 1 : (gen.uniform() < 0.3 ? 2 : 0);
            }
            const std::size_t cap = 2 + gen.index(8);
            Rng r(7);
            auto m = cart_fit(X, y, cap, ClassWeighting::none, r, 3);
            CHECK(m.leaf_count() <= cap);
            std::vector<std::vector<double>> counts(m.nodes.size(), std::vector<double>(3, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t at = 0;
                for (;;) {
                    counts[at][y[i]] += 1;
                    const auto& nd = m.nodes[at];
                    if (nd.is_leaf()) break;
                    at = static_cast<std::size_t>(X(i, nd.feature) <= nd.threshold ? nd.left : nd.right);
                }
            }
            for (std::size_t k = 0; k < m.nodes.size(); ++k) {
                const auto& nd = m.nodes[k];
                if (nd.is_leaf()) {
                    CHECK(nd.label == argmax(nd.distribution));
                    continue;
                }
                const auto& p = counts[k];
                const auto& l = counts[static_cast<std::size_t>(nd.left)];
                const auto& rr = counts[static_cast<std::size_t>(nd.right)];
                const double sp = std::accumulate(p.begin(), p.end(), 0.0);
                const double sl = std::accumulate(l.begin(), l.end(), 0.0);
                const double sr = std::accumulate(rr.begin(), rr.end(), 0.0);
                CHECK(sl * gini(l) + sr * gini(rr) < sp * gini(p));
            }
        }
    }

    TEST_CASE("cart predict follows a hand-traced tree") {
        // x0 <= 5 ? (x1 <= 2 ? A : B) : (x1 <= 7 ? C : A)
        CartModel m;
        m.n_classes = 3;
        m.n_features = 2;
        m.nodes = {hand::split_node(0, 5, 1, 2, 0), hand::split_node(1, 2, 3, 4, 1), hand::split_node(1, 7, 5, 6, 1),
                   hand::leaf({1, 0, 0}, 2), hand::leaf({0, 1, 0}, 2), hand::leaf({0, 0, 1}, 2), hand::leaf({1, 0, 0}, 2)};
        Matrix X{{0, 0}, {5, 2}, {5, 2.01}, {4, 9}, {5.01, 0}, {6, 7}, {6, 7.5}, {9, 100},
                 {-1, -1}, {10, 3}, {3, 1}, {7, 8}};
        const Labels expected{0, 0, 1, 1, 2, 2, 0, 0, 0, 2, 0, 0};
        CHECK(cart_predict(m, X) == expected);
        Matrix wrong{{1, 2, 3}};
        CHECK_THROWS_AS(cart_predict(m, wrong), std::invalid_argument);
    }

    TEST_CASE("cart reproduces training labels on pure leaves") {
        Rng gen(8);
        Matrix X(30, 2);
        Labels y(30);
        for (std::size_t i = 0; i < 30; ++i) {
            X(i, 0) = static_cast<double>(i);
            X(i, 1) = gen.normal();
            y[i] = static_cast<int>((i / 5) % 3);
        }
        Rng r(9);
        auto m = cart_fit(X, y, 100, ClassWeighting::none, r);
        CHECK(cart_predict(m, X) == y);
    }

    TEST_CASE("kmeans examples") {
        Rng r(10);
        Matrix X{{0}, {2}, {10}, {12}};
        auto m = kmeans_fit(X, 2, r, 10);
        std::vector<double> c{m.centroids(0, 0), m.centroids(1, 0)};
        std::sort(c.begin(), c.end());
        CHECK(c[0] == doctest::Approx(1.0));
        CHECK(c[1] == doctest::Approx(11.0));
        CHECK(m.cost == doctest::Approx(1.0));

        auto all = kmeans_fit(X, 4, r, 10);
        CHECK(all.cost == doctest::Approx(0.0));
        auto one = kmeans_fit(X, 1, r, 1);
        CHECK(one.centroids(0, 0) == doctest::Approx(6.0));
        CHECK(one.cost == doctest::Approx((36 + 16 + 16 + 36) / 4.0));
        CHECK_THROWS_AS(kmeans_fit(X, 5, r), std::invalid_argument);
    }

    TEST_CASE("kmeans assignments are nearest centroids and cost is consistent") {
        Rng r(11);
        for (int t = 0; t < 20; ++t) {
            Matrix X(50, 3);
            for (auto& v : X.data()) v = r.normal();
            auto m = kmeans_fit(X, 4, r, 3);
            double cost = 0.0;
            for (std::size_t i = 0; i < 50; ++i) {
                CHECK(m.assignments[i] == nearest_centroid(X.row(i), m.centroids));
                cost += squared_distance(X.row(i), m.centroids.row(m.assignments[i]));
            }
            CHECK(m.cost == doctest::Approx(cost / 50).epsilon(1e-9));
        }
    }

    TEST_CASE("lloyd cost never increases") {
        Rng r(12);
        for (int t = 0; t < 30; ++t) {
            Matrix X(60, 2);
            for (auto& v : X.data()) v = r.normal() * (1 + r.index(3));
            std::vector<double> trace;
            lloyd(X, kmeans_plus_plus(X, 5, r), 100, &trace);
            for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
        }
    }

    TEST_CASE("kmeans with restarts finds the brute-force optimum on small instances") {
        Rng r(13);
        int hits = 0;
        for (int t = 0; t < 30; ++t) {
            const std::size_t n = 5 + r.index(5);
            const int k = 2 + static_cast<int>(r.index(2));
            Matrix X(n, 2);
            for (auto& v : X.data()) v = r.normal();
            hits += std::fabs(kmeans_fit(X, k, r, 50).cost - oracle::optimal_partition_cost(X, k)) <= 1e-9;
        }
        CHECK(hits >= 28);
    }

    TEST_CASE("forest shape, determinism and oob masks") {
        Rng gen(14);
        Matrix X(80, 4);
        Labels y(80);
        for (std::size_t i = 0; i < 80; ++i) {
            for (std::size_t j = 0; j < 4; ++j) X(i, j) = gen.normal();
            y[i] = X(i, 1) > 0;
        }
        Rng a(15), b(15);
        auto f = rf_fit(X, y, 2, 1, ClassWeighting::balanced_subsample, a);
        CHECK(f.trees.size() == 2);
        for (const auto& t : f.trees) {
            CHECK(t.depth() <= 1);
            CHECK(t.leaf_count() <= 2);
        }
        auto g = rf_fit(X, y, 2, 1, ClassWeighting::balanced_subsample, b);
        for (std::size_t t = 0; t < 2; ++t) {
            CHECK(f.trees[t].to_text() == g.trees[t].to_text());
            CHECK(f.oob_masks[t] == g.oob_masks[t]);
        }
        Rng c(16);
        auto deep = rf_fit(X, y, 7, 3, ClassWeighting::none, c);
        for (const auto& t : deep.trees) CHECK(t.depth() <= 3);
        for (const auto& m : deep.oob_masks) {
            CHECK(m.size() == 80);
            const auto oob = std::count(m.begin(), m.end(), true);
            CHECK(oob > 10);
            CHECK(oob < 50);
        }
    }

    TEST_CASE("forest fits separable blobs") {
        Rng r(17);
        Dataset ds = make_blobs(300, 3, 4, 0.5, r);
        auto f = rf_fit(ds.X, ds.y, 10, 5, ClassWeighting::balanced_subsample, r);
        CHECK(f1_macro(ds.y, rf_predict(f, ds.X), 3) >= 0.95);
        auto tree = cart_fit(ds.X, ds.y, 1000, ClassWeighting::none, r);
        CHECK(f1_macro(ds.y, cart_predict(tree, ds.X), 3) >= 0.95);
    }

    TEST_CASE("single-class forest is constant") {
        Matrix X{{0}, {1}, {2}};
        Labels y{0, 0, 0};
        Rng r(18);
        auto f = rf_fit(X, y, 3, 2, ClassWeighting::none, r);
        for (int v : rf_predict(f, X)) CHECK(v == 0);
    }

    TEST_CASE("forest probabilities average the trees") {
        auto t = hand::stump(0, 0.5, {0.9, 0.1}, {0.2, 0.8}, 1);
        Matrix X{{0.0}, {1.0}};
        auto same = hand::forest({t, t, t});
        CHECK(rf_predict(same, X) == cart_predict(t, X));

        CartModel yes, no;
        yes.n_classes = no.n_classes = 2;
        yes.n_features = no.n_features = 1;
        yes.nodes = {hand::leaf({1, 0}, 0)};
        no.nodes = {hand::leaf({0, 1}, 0)};
        auto tie = hand::forest({yes, no});
        const Matrix P = rf_predict_proba(tie, X);
        CHECK(P(0, 0) == 0.5);
        CHECK(P(0, 1) == 0.5);
        CHECK(rf_predict(tie, X)[0] == 0);

        auto three = hand::forest({hand::stump(0, 0.5, {1, 0, 0}, {0, 1, 0}, 1), hand::stump(0, 0.2, {0, 0, 1}, {0.5, 0.5, 0}, 1),
                                  hand::stump(0, 2.0, {0.2, 0.2, 0.6}, {0, 0, 1}, 1)});
        const Matrix Q = rf_predict_proba(three, X);
        // x = 0: (1,0,0) + (0,0,1) + (.2,.2,.6); x = 1: (0,1,0) + (.5,.5,0) + (.2,.2,.6)
        CHECK(Q(0, 0) == doctest::Approx(1.2 / 3));
        CHECK(Q(0, 1) == doctest::Approx(0.2 / 3));
        CHECK(Q(0, 2) == doctest::Approx(1.6 / 3));
        CHECK(Q(1, 0) == doctest::Approx(0.7 / 3));
        CHECK(Q(1, 1) == doctest::Approx(1.7 / 3));
        CHECK(Q(1, 2) == doctest::Approx(0.6 / 3));
        Matrix wrong{{1, 2}};
        CHECK_THROWS_AS(rf_predict(three, wrong), std::invalid_argument);
    }

    TEST_CASE("argmax ties go to the lowest index") {
        const std::vector<double> v{0.2, 0.4, 0.4};
        CHECK(argmax(v) == 1);
    }
}
