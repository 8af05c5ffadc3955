#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "distlearn/data.hpp"
#include "distlearn/matrix.hpp"
#include "distlearn/numerics.hpp"

namespace distlearn {

enum class ClassWeighting { none, balanced, balanced_subsample };

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> v);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int depth = 0;
    int label = 0;
    std::vector<double> distribution;  // weighted class fractions of the training rows that reached the node

    bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary classification tree. Rows go left iff x[feature] <= threshold.
struct CartModel {
    std::vector<TreeNode> nodes;  // root is nodes[0]
    int n_classes = 0;
    std::size_t n_features = 0;
    std::size_t max_leaves = 0;
    std::vector<double> class_weights;

    std::size_t leaf_count() const;
    int depth() const;
    /// Node index of the leaf that `x` lands in.
    std::size_t apply(std::span<const double> x) const;
    int predict_one(std::span<const double> x) const { return nodes[apply(x)].label; }
    std::string to_text() const;
};

struct TreeGrowth {
    std::size_t max_leaves = std::numeric_limits<std::size_t>::max();
    int max_depth = -1;            // -1: unbounded
    std::size_t max_features = 0;  // 0: every feature at every split
};

/// Best-first weighted-Gini tree growth. Node expansions are ordered by the
/// absolute weighted impurity decrease they bring; only strict decreases are
/// executed. Rows with zero weight are ignored.
CartModel grow_tree(const Matrix& X, const Labels& y, int n_classes, std::span<const double> sample_weight,
                    const TreeGrowth& growth, Rng& rng);

/// Per-class weights N / (C * N_c) over the classes present in `y`.
std::vector<double> balanced_class_weights(const Labels& y, int n_classes, std::span<const double> multiplicity = {});

/// CART with at most `max_leaves` leaves. `n_classes` = 0 infers it from y.
CartModel cart_fit(const Matrix& X, const Labels& y, std::size_t max_leaves, ClassWeighting weighting, Rng& rng,
                   int n_classes = 0);
Labels cart_predict(const CartModel& m, const Matrix& X);
Matrix cart_predict_proba(const CartModel& m, const Matrix& X);

struct ClusteringModel {
    Matrix centroids;
    std::vector<int> assignments;
    double cost = 0.0;
    int k = 0;
};

/// Index of the nearest centroid, ties to the lowest index.
int nearest_centroid(std::span<const double> x, const Matrix& centroids);

/// Lloyd iterations from the given centroids. `cost_trace`, when non-null,
/// receives the clustering cost after every assignment step.
ClusteringModel lloyd(const Matrix& X, Matrix centroids, int max_iter, std::vector<double>* cost_trace = nullptr);

Matrix kmeans_plus_plus(const Matrix& X, int k, Rng& rng);

/// Best of `n_restarts` k-means++-seeded Lloyd runs.
ClusteringModel kmeans_fit(const Matrix& X, int k, Rng& rng, int n_restarts = 10, int max_iter = 300);

struct Forest {
    std::vector<CartModel> trees;
    std::vector<std::vector<bool>> oob_masks;  // oob_masks[t][i]: row i absent from tree t's bootstrap
    std::size_t num_trees = 0;
    int max_depth = -1;
    int n_classes = 0;
    std::size_t n_features = 0;
};

/// Random forest with bootstrap size N and ceil(sqrt(D)) candidate features per split.
Forest rf_fit(const Matrix& X, const Labels& y, std::size_t num_trees, int max_depth, ClassWeighting weighting, Rng& rng,
              int n_classes = 0);
/// Mean of per-tree leaf distributions.
Matrix rf_predict_proba(const Forest& f, const Matrix& X);
Labels rf_predict(const Forest& f, const Matrix& X);
/// Forest restricted to the listed trees, in the listed order.
Forest subforest(const Forest& f, std::span<const std::size_t> tree_idx);

Labels argmax_rows(const Matrix& proba);

}  // namespace distlearn
