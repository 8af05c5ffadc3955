#include "distlearn/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace distlearn {

void SearchSpace::validate() const {
    if (dims.empty()) throw std::invalid_argument("SearchSpace: no dimensions");
    for (const auto& d : dims) {
        if (!(d.lower < d.upper)) throw std::invalid_argument("SearchSpace: lower must be < upper for " + d.name);
        if (d.scale == ParamScale::log10 && !(d.lower > 0.0))
            throw std::invalid_argument("SearchSpace: log-scaled bounds must be positive for " + d.name);
        if (d.kind == ParamKind::integer && (d.lower != std::round(d.lower) || d.upper != std::round(d.upper)))
            throw std::invalid_argument("SearchSpace: integer bounds must be integral for " + d.name);
    }
}

std::vector<double> SearchSpace::sample(Rng& rng) const {
    std::vector<double> p(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& d = dims[i];
        if (d.kind == ParamKind::integer) {
            p[i] = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(d.lower), static_cast<std::int64_t>(d.upper) + 1));
        } else if (d.scale == ParamScale::log10) {
            p[i] = std::pow(10.0, rng.uniform(std::log10(d.lower), std::log10(d.upper)));
            p[i] = std::clamp(p[i], d.lower, d.upper);
        } else {
            p[i] = rng.uniform(d.lower, d.upper);
        }
    }
    return p;
}

std::vector<double> SearchSpace::to_unit(const std::vector<double>& point) const {
    std::vector<double> u(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& d = dims[i];
        if (d.scale == ParamScale::log10)
            u[i] = (std::log10(point[i]) - std::log10(d.lower)) / (std::log10(d.upper) - std::log10(d.lower));
        else
            u[i] = (point[i] - d.lower) / (d.upper - d.lower);
    }
    return u;
}

bool SearchSpace::contains(const std::vector<double>& point) const {
    if (point.size() != dims.size()) return false;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (point[i] < dims[i].lower || point[i] > dims[i].upper) return false;
        if (dims[i].kind == ParamKind::integer && point[i] != std::round(point[i])) return false;
    }
    return true;
}

GaussianProcess::GaussianProcess(Matrix x, std::vector<double> y, double lengthscale, double noise)
    : x_(std::move(x)), lengthscale_(lengthscale), noise_(noise) {
    if (x_.rows() != y.size() || y.empty()) throw std::invalid_argument("GaussianProcess: bad training data");
    const std::size_t n = x_.rows();
    double jitter = noise_;
    for (int attempt = 0;; ++attempt) {
        chol_ = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) chol_(i, j) = chol_(j, i) = kernel(x_.row(i), x_.row(j));
        for (std::size_t i = 0; i < n; ++i) chol_(i, i) += jitter;
        if (cholesky(chol_)) break;
        if (attempt > 12) throw std::runtime_error("GaussianProcess: kernel matrix not positive definite");
        jitter = std::max(jitter * 10.0, 1e-10);
    }
    alpha_ = cholesky_solve(chol_, y);
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
    return std::exp(-0.5 * squared_distance(a, b) / (lengthscale_ * lengthscale_));
}

std::pair<double, double> GaussianProcess::predict(std::span<const double> x) const {
    const std::size_t n = x_.rows();
    std::vector<double> k(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = kernel(x, x_.row(i));
        mean += k[i] * alpha_[i];
    }
    const auto v = forward_substitute(chol_, k);
    double var = 1.0;
    for (double vi : v) var -= vi * vi;
    return {mean, std::max(var, 0.0)};
}

double median_pairwise_distance(const Matrix& x) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            const double v = std::sqrt(squared_distance(x.row(i), x.row(j)));
            if (v > 0.0) d.push_back(v);
        }
    if (d.empty()) return 1.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

double expected_improvement(double mean, double variance, double incumbent) {
    const double sd = std::sqrt(std::max(variance, 0.0));
    const double diff = mean - incumbent;
    if (sd < 1e-12) return std::max(diff, 0.0);
    const double z = diff / sd;
    const double cdf = 1.0 - normal_sf(z);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return diff * cdf + sd * pdf;
}

MaximizeResult maximize(const Objective& objective, const SearchSpace& space, std::size_t budget, Rng& rng,
                        const BayesOptOptions& options) {
    space.validate();
    if (budget < 1) throw std::invalid_argument("maximize: budget must be >= 1");
    const std::size_t n_init = std::min(
        budget, options.n_initial ? options.n_initial
                                  : std::max<std::size_t>(10, (budget + 9) / 10));

    MaximizeResult res;
    res.history.reserve(budget);
    double lengthscale = 1.0;
    std::size_t since_refresh = options.lengthscale_refresh;

    auto evaluate = [&](std::vector<double> p, std::size_t it) {
        Trial t;
        t.params = std::move(p);
        t.iteration = it;
        try {
            t.objective = objective(t.params);
        } catch (const std::exception&) {
            t.objective = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(t.objective)) {
            t.failed = true;
            t.objective = -std::numeric_limits<double>::infinity();
        }
        if (res.history.empty() || t.objective > res.best.objective) res.best = t;
        res.history.push_back(std::move(t));
    };

    for (std::size_t it = 0; it < budget; ++it) {
        const bool random_step = options.method == Optimizer::random_search || it < n_init;
        std::vector<double> finite_y;
        for (const auto& t : res.history)
            if (!t.failed) finite_y.push_back(t.objective);
        if (random_step || finite_y.size() < 2) {
            evaluate(space.sample(rng), it);
            continue;
        }

        // Condition on the (capped) history; failed trials take the worst finite score.
        const double worst = *std::min_element(finite_y.begin(), finite_y.end());
        std::vector<std::size_t> use(res.history.size());
        std::iota(use.begin(), use.end(), 0);
        if (use.size() > options.max_gp_points) {
            std::stable_sort(use.begin(), use.end(), [&](auto a, auto b) {
                return res.history[a].objective > res.history[b].objective;
            });
            use.resize(options.max_gp_points);
            std::sort(use.begin(), use.end());
        }
        Matrix xs(use.size(), space.size());
        std::vector<double> ys(use.size());
        for (std::size_t r = 0; r < use.size(); ++r) {
            const auto& t = res.history[use[r]];
            auto u = space.to_unit(t.params);
            std::copy(u.begin(), u.end(), xs.row(r).begin());
            ys[r] = t.failed ? worst : t.objective;
        }
        const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double var = 0.0;
        for (double v : ys) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / static_cast<double>(ys.size()));
        if (!(sd > 1e-12)) sd = 1.0;
        for (auto& v : ys) v = (v - mean) / sd;
        const double incumbent = *std::max_element(ys.begin(), ys.end());

        if (since_refresh >= options.lengthscale_refresh) {
            lengthscale = median_pairwise_distance(xs);
            since_refresh = 0;
        }
        ++since_refresh;

        GaussianProcess gp(std::move(xs), std::move(ys), lengthscale, options.noise);
        std::vector<double> best_point;
        double best_ei = -1.0;
        for (std::size_t c = 0; c < options.n_candidates; ++c) {
            auto cand = space.sample(rng);
            auto [m, v] = gp.predict(space.to_unit(cand));
            const double ei = expected_improvement(m, v, incumbent);
            if (ei > best_ei) {
                best_ei = ei;
                best_point = std::move(cand);
            }
        }
        evaluate(std::move(best_point), it);
    }
    return res;
}

}  // namespace distlearn
