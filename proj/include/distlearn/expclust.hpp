#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "distlearn/coas.hpp"
#include "distlearn/learners.hpp"
#include "distlearn/matrix.hpp"

namespace distlearn {

/// Axis-aligned tree whose leaves define a clustering. Leaf centroids are the
/// means of the points routed to each leaf.
struct ExplanationTree {
    CartModel tree;
    std::vector<int> leaf_of_node;     // node index -> leaf ordinal, -1 for internal nodes
    std::vector<int> leaf_cluster;     // leaf ordinal -> reference cluster id
    std::vector<int> assignments;      // row -> leaf ordinal
    Matrix leaf_centroids;             // leaf ordinal -> centroid
    std::vector<std::size_t> node_mistakes;  // IMM: mistakes made at each internal node (0 at leaves)

    std::size_t leaves() const noexcept { return leaf_cluster.size(); }
};

struct ClusteringEval {
    double j_ex = 0.0;
    double j_km = 0.0;
    double cost_ratio = 1.0;
};

/// Mean squared distance of each point to the centroid of its cluster.
double clustering_cost(const Matrix& X, std::span<const int> assignments, const Matrix& centroids);

/// j_ex / j_km; 1 when both vanish. Throws std::domain_error when only j_km does.
double cost_ratio(double j_ex, double j_km);

/// Routes every row of X through `tree` and computes per-leaf means. A leaf
/// that receives no point takes the reference centroid of its cluster.
ExplanationTree make_explanation(CartModel tree, const Matrix& X, const ClusteringModel& reference);

/// Greedy mistake-minimizing tree with exactly k leaves (one reference center
/// each). Points sent away from their center are dropped from deeper nodes.
ExplanationTree imm_fit(const Matrix& X, const ClusteringModel& reference);

struct ImmSplit {
    int feature = -1;
    double threshold = 0.0;
    std::size_t mistakes = 0;
};

/// Best mistake-minimizing split of `rows` given the surviving `centers`.
/// Returns nullopt when no axis separates any two centers.
std::optional<ImmSplit> imm_best_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> assignments,
                                       const Matrix& centroids, std::span<const int> centers);

struct ExplainOptions {
    std::size_t ns_lo = 0;  // 0: min(400, ceil(N / 2))
    std::size_t ns_hi = 0;  // 0: N
    BayesOptOptions optimizer = coas::default_optimizer();
};

struct CartExplanation {
    ExplanationTree explanation;
    ClusteringEval eval;
    bool fewer_leaves = false;  // CART stopped below k leaves
    std::size_t training_runs = 0;
    std::optional<coas::SamplingParams> learned;
};

/// CART (max k leaves, balanced class weights) on the reference cluster
/// labels, optionally wrapped in COAS with train = validation = X and
/// F1-macro as the metric.
CartExplanation explain_with_cart(const Matrix& X, const ClusteringModel& reference, bool use_coas, std::size_t budget,
                                  Rng& rng, const ExplainOptions& options = {});

ClusteringEval evaluate_explanation(const ExplanationTree& e, const Matrix& X, const ClusteringModel& reference);

}  // namespace distlearn
