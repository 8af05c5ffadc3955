#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "distlearn/bayesopt.hpp"
#include "doctest.h"

using namespace distlearn;

namespace {

SearchSpace unit_square() {
    SearchSpace s;
    s.dims = {{"x", ParamKind::real, 0.0, 1.0, ParamScale::linear}, {"y", ParamKind::real, 0.0, 1.0, ParamScale::linear}};
    return s;
}

double quadratic(const std::vector<double>& p) { return -(p[0] - 0.3) * (p[0] - 0.3) - (p[1] - 0.7) * (p[1] - 0.7); }

}  // namespace

TEST_SUITE("bayesopt") {
    TEST_CASE("budget of one is a single random evaluation") {
        Rng r(1);
        int calls = 0;
        auto res = maximize([&](const std::vector<double>& p) { ++calls; return p[0]; }, unit_square(), 1, r);
        CHECK(calls == 1);
        REQUIRE(res.history.size() == 1);
        CHECK(res.best.params == res.history[0].params);
        CHECK(res.best.objective == res.history[0].params[0]);
    }

    TEST_CASE("constant objective") {
        Rng r(2);
        auto res = maximize([](const std::vector<double>&) { return 0.7; }, unit_square(), 25, r);
        CHECK(res.best.objective == 0.7);
        CHECK(res.best.iteration == 0);
    }

    TEST_CASE("history contract for both optimizers") {
        SearchSpace s;
        s.dims = {{"a", ParamKind::real, 0.1, 10.0, ParamScale::log10},
                  {"n", ParamKind::integer, 3.0, 9.0, ParamScale::linear},
                  {"p", ParamKind::real, -1.0, 1.0, ParamScale::linear}};
        for (auto method : {Optimizer::gp_expected_improvement, Optimizer::random_search}) {
            BayesOptOptions o;
            o.method = method;
            Rng r(3);
            int calls = 0;
            auto res = maximize(
                [&](const std::vector<double>& p) {
                    ++calls;
                    return std::sin(3 * p[2]) + std::log10(p[0]) - 0.1 * p[1];
                },
                s, 40, r, o);
            CHECK(calls == 40);
            REQUIRE(res.history.size() == 40);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t first = 0;
            for (std::size_t i = 0; i < res.history.size(); ++i) {
                CHECK(s.contains(res.history[i].params));
                CHECK(res.history[i].iteration == i);
                if (res.history[i].objective > best) best = res.history[i].objective, first = i;
            }
            CHECK(res.best.objective == best);
            CHECK(res.best.iteration == first);
        }
    }

    TEST_CASE("failed evaluations are recorded and never become the incumbent") {
        Rng r(4);
        int calls = 0;
        auto res = maximize(
            [&](const std::vector<double>& p) -> double {
                ++calls;
                if (calls % 3 == 0) throw std::runtime_error("boom");
                if (calls % 3 == 1) return std::numeric_limits<double>::quiet_NaN();
                return p[0];
            },
            unit_square(), 30, r);
        CHECK(calls == 30);
        std::size_t failed = 0;
        for (const auto& t : res.history)
            if (t.failed) {
                ++failed;
                CHECK(t.objective == -std::numeric_limits<double>::infinity());
            }
        CHECK(failed == 20);
        CHECK_FALSE(res.best.failed);
    }

    TEST_CASE("quadratic optimum is located") {
        // Dense grid oracle: the maximum of the quadratic over the unit square.
        double grid_best = -1e300;
        std::vector<double> arg(2);
        for (int i = 0; i <= 1000; ++i)
            for (int j = 0; j <= 1000; ++j) {
                const std::vector<double> p{i / 1000.0, j / 1000.0};
                if (quadratic(p) > grid_best) grid_best = quadratic(p), arg = p;
            }
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng r(seed);
            auto res = maximize(quadratic, unit_square(), 60, r);
            const double dist = std::hypot(res.best.params[0] - arg[0], res.best.params[1] - arg[1]);
            hits += dist <= 0.05;
        }
        CHECK(hits >= 95);
    }

    TEST_CASE("reproducibility") {
        for (auto method : {Optimizer::gp_expected_improvement, Optimizer::random_search}) {
            BayesOptOptions o;
            o.method = method;
            Rng a(5), b(5);
            auto ra = maximize(quadratic, unit_square(), 30, a, o);
            auto rb = maximize(quadratic, unit_square(), 30, b, o);
            for (std::size_t i = 0; i < 30; ++i) CHECK(ra.history[i].params == rb.history[i].params);
        }
    }

    TEST_CASE("gp posterior interpolates with tiny noise") {
        Matrix x;
        std::vector<double> y;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                x.append_row(std::vector<double>{i / 2.0, j / 2.0});
                y.push_back(std::sin(4 * i / 2.0) + j / 2.0);
            }
        GaussianProcess gp(x, y, median_pairwise_distance(x), 1e-8);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto [m, v] = gp.predict(x.row(i));
            CHECK(std::fabs(m - y[i]) <= 1e-6);
            CHECK(v >= 0.0);
            CHECK(v < 1e-6);
        }
        auto [m, v] = gp.predict(std::vector<double>{5.0, 5.0});
        CHECK(std::fabs(m) < 1e-6);
        CHECK(v == doctest::Approx(1.0));
    }

    TEST_CASE("expected improvement") {
        CHECK(expected_improvement(1.0, 0.0, 0.5) == doctest::Approx(0.5));
        CHECK(expected_improvement(0.0, 0.0, 0.5) == 0.0);
        // Zero mean gap: EI = sd * phi(0).
        CHECK(expected_improvement(0.5, 4.0, 0.5) == doctest::Approx(2.0 / std::sqrt(2 * M_PI)));
        CHECK(expected_improvement(0.0, 1.0, 0.5) > 0.0);
    }

    TEST_CASE("median pairwise distance") {
        Matrix x{{0, 0}, {3, 4}, {6, 8}};
        CHECK(median_pairwise_distance(x) == doctest::Approx(5.0));
        Matrix one{{1, 1}};
        CHECK(median_pairwise_distance(one) == 1.0);
    }

    TEST_CASE("search space validation") {
        SearchSpace bad;
        bad.dims = {{"x", ParamKind::real, 1.0, 1.0, ParamScale::linear}};
        Rng r(7);
        CHECK_THROWS_AS(maximize(quadratic, bad, 3, r), std::invalid_argument);
        CHECK_THROWS_AS(maximize(quadratic, unit_square(), 0, r), std::invalid_argument);
        SearchSpace ints;
        ints.dims = {{"n", ParamKind::integer, 4.0, 5.0, ParamScale::linear}};
        for (int i = 0; i < 50; ++i) {
            const double v = ints.sample(r)[0];
            CHECK((v == 4.0 || v == 5.0));
        }
    }
}
