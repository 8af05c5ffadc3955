#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "distlearn/matrix.hpp"
#include "distlearn/numerics.hpp"

namespace distlearn {

enum class ParamKind { real, integer };
enum class ParamScale { linear, log10 };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::real;
    double lower = 0.0;
    double upper = 1.0;
    ParamScale scale = ParamScale::linear;
};

/// Box-bounded mixed real/integer space. Points are stored in native units;
/// the optimizer works on coordinates min-max normalized to [0, 1] (after a
/// log10 transform for log-scaled dimensions).
struct SearchSpace {
    std::vector<ParamSpec> dims;

    void validate() const;
    std::size_t size() const noexcept { return dims.size(); }
    std::vector<double> sample(Rng& rng) const;
    std::vector<double> to_unit(const std::vector<double>& point) const;
    bool contains(const std::vector<double>& point) const;
};

struct Trial {
    std::vector<double> params;
    double objective = 0.0;  // -inf when the evaluation failed
    std::size_t iteration = 0;
    bool failed = false;
};

struct MaximizeResult {
    Trial best;
    std::vector<Trial> history;
};

using Objective = std::function<double(const std::vector<double>&)>;

enum class Optimizer { gp_expected_improvement, random_search };

struct BayesOptOptions {
    Optimizer method = Optimizer::gp_expected_improvement;
    std::size_t n_initial = 0;  // 0: max(10, ceil(T / 10))
    std::size_t n_candidates = 512;
    double noise = 1e-6;
    std::size_t lengthscale_refresh = 10;
    // Upper bound on the observations the surrogate conditions on; beyond it
    // the best-scoring points are kept. Bounds per-iteration cost for long budgets.
    std::size_t max_gp_points = 500;
};

/// Zero-mean GP with unit-variance squared-exponential kernel.
class GaussianProcess {
public:
    GaussianProcess(Matrix x, std::vector<double> y, double lengthscale, double noise);
    double kernel(std::span<const double> a, std::span<const double> b) const;
    /// Posterior mean and variance at `x`.
    std::pair<double, double> predict(std::span<const double> x) const;
    double lengthscale() const noexcept { return lengthscale_; }

private:
    Matrix x_;
    Matrix chol_;
    std::vector<double> alpha_;
    double lengthscale_;
    double noise_;
};

/// Median pairwise Euclidean distance between rows (1.0 for fewer than two
/// distinct rows).
double median_pairwise_distance(const Matrix& x);

double expected_improvement(double mean, double variance, double incumbent);

/// Runs exactly `budget` evaluations of `objective` with no early stopping.
/// Evaluations that throw or return a non-finite value are recorded as failed
/// with objective -inf. The best trial is the first one attaining the maximum.
MaximizeResult maximize(const Objective& objective, const SearchSpace& space, std::size_t budget, Rng& rng,
                        const BayesOptOptions& options = {});

}  // namespace distlearn
