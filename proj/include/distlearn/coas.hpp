#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "distlearn/bayesopt.hpp"
#include "distlearn/data.hpp"
#include "distlearn/matrix.hpp"
#include "distlearn/numerics.hpp"

namespace distlearn {

struct MaxLeaves {
    std::size_t k = 1;
    friend bool operator==(const MaxLeaves&, const MaxLeaves&) = default;
};
struct NumPrototypes {
    std::size_t n_p = 1;
    friend bool operator==(const NumPrototypes&, const NumPrototypes&) = default;
};
struct ForestShape {
    std::size_t num_trees = 1;
    int max_depth = 1;
    friend bool operator==(const ForestShape&, const ForestShape&) = default;
};

/// Task-specific capacity cap.
using ModelSize = std::variant<MaxLeaves, NumPrototypes, ForestShape>;

/// "leaves=5", "protos=20", "forest=2x5" (trees x depth).
std::string to_string(const ModelSize& size);
ModelSize parse_model_size(const std::string& text);

namespace coas {

/// Parameters of the training-set sampler: Beta(a, b) density over oracle
/// uncertainty, sample size, and the uniformly drawn fraction.
struct SamplingParams {
    double a = 1.0;
    double b = 1.0;
    std::size_t n_s = 1;
    double p_o = 0.0;
};

/// Per-instance oracle uncertainty rescaled to [0, 1].
struct OracleScores {
    std::vector<double> u;
};

/// Min-max rescale of raw uncertainties; a constant vector maps to 0.5.
OracleScores rescale_uncertainty(std::span<const double> raw);

/// Fits an unconstrained random forest (no depth cap, `n_trees` trees) on the
/// training data and scores each instance by 1 - max_c P(c | x_i), using the
/// out-of-bag vote where the instance was left out of at least one bootstrap.
/// Identical rows count as one instance for the out-of-bag test.
OracleScores oracle_scores(const Matrix& X, const Labels& y, Rng& rng, int n_classes = 0, std::size_t n_trees = 100);

struct Sample {
    Matrix X;
    Labels y;
    IndexList indices;
    bool uniform_fallback = false;  // Beta weights degenerated; weighted draws were uniform
};

/// Normalized Beta(a, b) density weights at clamp(u_i, 1e-6, 1 - 1e-6).
/// Returns an empty vector when the weights degenerate.
std::vector<double> beta_weights(const OracleScores& scores, double a, double b);

/// Draws n_s rows with replacement: floor(p_o * n_s) uniformly, the rest in
/// proportion to the Beta density of each row's uncertainty.
Sample sample(const Matrix& X, const Labels& y, const OracleScores& scores, const SamplingParams& params, Rng& rng);

/// Observation noise assumed by the surrogate for COAS objectives, whose
/// scores vary between repeated draws of the same sampling parameters.
inline constexpr double kObjectiveNoise = 0.1;

inline BayesOptOptions default_optimizer() {
    BayesOptOptions o;
    o.noise = kObjectiveNoise;
    return o;
}

struct Config {
    std::size_t budget = 100;
    std::size_t ns_lo = 1;
    std::size_t ns_hi = 1;
    double shape_lo = 0.1;  // bounds on a and b, searched on a log10 scale
    double shape_hi = 10.0;
    BayesOptOptions optimizer = default_optimizer();
    const OracleScores* scores = nullptr;  // computed from the training data when null
    std::size_t oracle_trees = 100;
    int n_classes = 0;
};

/// Search space over (a, b, n_s, p_o); n_s is left out when its bounds coincide.
SearchSpace sampling_space(const Config& cfg);
SamplingParams params_from_point(const std::vector<double>& point, const Config& cfg);

template <typename Model>
struct Result {
    SamplingParams best_params;
    std::optional<Model> best_model;
    double best_val_score = -std::numeric_limits<double>::infinity();
    std::vector<Trial> history;
    std::size_t training_runs = 0;
};

template <typename Model>
using TrainFn = std::function<Model(const ModelSize&, const Matrix&, const Labels&, Rng&)>;
template <typename Model>
using MetricFn = std::function<double(const Model&, const Matrix&, const Labels&)>;

/// Maximizes the validation metric of a size-constrained model trained on
/// a drawn sample, over the sampler's parameters. Exactly `cfg.budget`
/// training runs happen; the returned model is the one trained at the best
/// iterate (no retraining).
template <typename Model>
Result<Model> optimize(const TrainFn<Model>& train, const MetricFn<Model>& metric, const Matrix& X_train,
                       const Labels& y_train, const Matrix& X_val, const Labels& y_val, const ModelSize& size,
                       const Config& cfg, Rng& rng) {
    if (cfg.budget < 1) throw std::invalid_argument("coas::optimize: budget must be >= 1");
    if (cfg.ns_lo > cfg.ns_hi || cfg.ns_lo < 1) throw std::invalid_argument("coas::optimize: bad sample-size bounds");
    OracleScores own;
    const OracleScores* scores = cfg.scores;
    if (!scores) {
        Rng oracle_rng = rng.child(0x0a5c1e);
        own = oracle_scores(X_train, y_train, oracle_rng, cfg.n_classes, cfg.oracle_trees);
        scores = &own;
    }
    if (scores->u.size() != X_train.rows()) throw std::invalid_argument("coas::optimize: score length mismatch");

    Result<Model> res;
    std::size_t iteration = 0;
    Rng draw_root = rng.child(0x5a3b1e);
    Objective objective = [&](const std::vector<double>& point) -> double {
        const SamplingParams p = params_from_point(point, cfg);
        Rng draw = draw_root.child(iteration++);
        Sample s = sample(X_train, y_train, *scores, p, draw);
        ++res.training_runs;
        Model m = train(size, s.X, s.y, draw);
        const double score = metric(m, X_val, y_val);
        if (std::isfinite(score) && score > res.best_val_score) {
            res.best_val_score = score;
            res.best_params = p;
            res.best_model = std::move(m);
        }
        return score;
    };
    Rng bo_rng = rng.child(0xb0);
    MaximizeResult mr = maximize(objective, sampling_space(cfg), cfg.budget, bo_rng, cfg.optimizer);
    res.history = std::move(mr.history);
    if (!res.best_model) res.best_params = params_from_point(mr.best.params, cfg);
    return res;
}

}  // namespace coas
}  // namespace distlearn
