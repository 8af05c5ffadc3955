#pragma once

#include <cstddef>
#include <vector>

#include "distlearn/data.hpp"
#include "distlearn/learners.hpp"
#include "distlearn/matrix.hpp"

namespace distlearn {

/// Mean over rows of sum_c (p_c - [y = c])^2. Rows must sum to 1 within 1e-9.
double brier_score(const Matrix& proba, const Labels& y);

struct PruneConfig {
    std::size_t initial_trees = 100;
    std::size_t target_trees = 1;
    double m_fraction = 0.2;  // share of trees kept after the OOB ranking
    bool strict = true;       // phase 2 accepts a tree only on a strict Brier decrease
};

struct PruneResult {
    Forest forest;
    std::vector<std::size_t> selected;  // indices into the input forest, in selection order
    std::vector<double> step_scores;    // ensemble score after each selection
    std::size_t accepted = 0;           // OTE: trees accepted by the Brier scan before filling
};

/// Per-tree accuracy on its out-of-bag rows; 0 for trees without any.
std::vector<double> oob_accuracies(const Forest& f, const Matrix& X_train, const Labels& y_train);

/// Two-phase OTE pruning: keep the ceil(m_fraction * |trees|) best trees by
/// OOB accuracy, then scan them in rank order and add each one that lowers
/// the validation Brier score of the running ensemble. Short scans are filled
/// with the best remaining ranked trees. step_scores holds Brier scores.
PruneResult ote_prune(const Forest& f, const Matrix& X_train, const Labels& y_train, const Matrix& X_val,
                      const Labels& y_val, const PruneConfig& cfg);

/// Greedy forward selection maximizing validation F1-macro of the growing
/// ensemble, ties to the lowest tree index. step_scores holds F1-macro.
PruneResult subforest_prune(const Forest& f, const Matrix& X_val, const Labels& y_val, std::size_t target_trees);

}  // namespace distlearn
