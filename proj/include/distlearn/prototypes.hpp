#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "distlearn/bayesopt.hpp"
#include "distlearn/coas.hpp"
#include "distlearn/data.hpp"
#include "distlearn/matrix.hpp"
#include "distlearn/numerics.hpp"

namespace distlearn {

/// Bandwidths searched for every RBF-based prototype method.
const std::vector<double>& default_gamma_grid();

/// 1-NN over a labelled prototype set; ties go to the lowest prototype index.
Labels one_nn_predict(const Matrix& prototypes, const Labels& proto_labels, const Matrix& X);

// --- FCNN1 -----------------------------------------------------------------

struct FcnnResult {
    std::vector<IndexList> subsets;  // V_1 ⊂ V_2 ⊂ ..., indices into the training rows
    bool consistent = false;
};

/// Training rows whose 1-NN label over `subset` equals their own label, for all rows.
bool is_consistent(const Matrix& X, const Labels& y, std::span<const std::size_t> subset);

/// Fast condensed nearest neighbour, FCNN1 variant. Seeds with the row
/// nearest to each class centroid, then repeatedly adds, for every prototype,
/// the closest misclassified row of its Voronoi cell.
FcnnResult fcnn1_fit(const Matrix& X, const Labels& y);

// --- SNC -------------------------------------------------------------------

struct SncModel {
    Matrix prototypes;
    Labels proto_labels;
    double gamma = 1.0;
    int n_classes = 0;
    std::vector<double> loss_trace;  // loss after every accepted step, starting with the initial loss
};

struct SncOptions {
    int max_iters = 100;
    int max_backtrack = 50;
    double initial_step = 1.0;
    double armijo = 1e-4;
};

/// Mean soft-1-NN negative log likelihood
///   -1/N sum_i log( sum_{j: l_j = y_i} K(x_i, p_j) / sum_j K(x_i, p_j) )
/// and, when `grad` is given, its gradient with respect to the prototypes.
double snc_loss(const Matrix& X, const Labels& y, const Matrix& prototypes, const Labels& proto_labels, double gamma,
                Matrix* grad = nullptr);

/// Label-stratified random subset of `n_p` rows (largest-remainder allocation,
/// at least one per class when n_p allows).
IndexList stratified_prototype_rows(const Labels& y, int n_classes, std::size_t n_p, Rng& rng);

SncModel snc_fit(const Matrix& X, const Labels& y, std::size_t n_p, double gamma, Rng& rng, const SncOptions& opt = {},
                 int n_classes = 0);
Labels snc_predict(const SncModel& m, const Matrix& X);

// --- ProtoNN ---------------------------------------------------------------

struct ProtoNNModel {
    Matrix prototypes;  // B, n_p x D
    Matrix scores;      // Z, C x n_p
    double gamma = 1.0;
    int n_classes = 0;
    std::vector<double> loss_trace;  // full training loss after every epoch
};

struct ProtoNNOptions {
    int epochs = 200;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Mean over rows of || onehot(y_i) - Z k(x_i) ||^2 where k_j = K(x_i, B_j).
double protonn_loss(const Matrix& X, const Labels& y, const Matrix& B, const Matrix& Z, double gamma, int n_classes,
                    Matrix* grad_B = nullptr, Matrix* grad_Z = nullptr);

ProtoNNModel protonn_fit(const Matrix& X, const Labels& y, std::size_t n_p, double gamma, Rng& rng,
                         const ProtoNNOptions& opt = {}, int n_classes = 0);
Matrix protonn_class_scores(const ProtoNNModel& m, const Matrix& X);
Labels protonn_predict(const ProtoNNModel& m, const Matrix& X);

// --- RBF networks ----------------------------------------------------------

struct RbfnModel {
    Matrix prototypes;
    double gamma = 1.0;
    Matrix weights;  // C x n_p, one-vs-rest rows
    double ridge = 1e-8;
    int n_classes = 0;
};

/// One-vs-rest +-1 targets fitted by ridge least squares on the kernel design matrix.
RbfnModel rbfn_fit(const Matrix& X, const Labels& y, const Matrix& prototypes, double gamma, double ridge = 1e-8,
                   int n_classes = 0);
Matrix rbfn_scores(const RbfnModel& m, const Matrix& X);
/// Binary problems predict class 1 iff its score is >= 0; otherwise argmax.
Labels rbfn_predict(const RbfnModel& m, const Matrix& X);

struct GammaChoice {
    double gamma = 0.0;
    double val_score = -std::numeric_limits<double>::infinity();
};

/// Evaluates `score(gamma)` over the grid; the best score wins, ties to the smaller gamma.
GammaChoice select_gamma(std::span<const double> grid, const std::function<double(double)>& score);

struct PrototypeFit {
    RbfnModel model;
    GammaChoice choice;
};

/// RBFN whose prototypes are the k-means centers (k = n_p) of the training rows.
PrototypeFit km_rbfn_fit(const Matrix& X, const Labels& y, const Matrix& X_val, const Labels& y_val, std::size_t n_p,
                         std::span<const double> gamma_grid, Rng& rng, int n_classes = 0);

struct CRbfnOptions {
    BayesOptOptions optimizer = coas::default_optimizer();
    double ridge = 1e-8;
    std::size_t oracle_trees = 100;
};

struct CRbfnFit {
    RbfnModel model;
    GammaChoice choice;
    coas::SamplingParams learned;
    std::size_t training_runs = 0;  // summed over the gamma grid
    std::vector<std::size_t> prototype_counts;  // n_s of every trial, all gammas
};

/// RBFN whose prototypes are a COAS sample of the training rows with
/// n_s in [n_p - 1, n_p]; one COAS run of `budget` trials per gamma.
CRbfnFit c_rbfn_fit(const Matrix& X, const Labels& y, const Matrix& X_val, const Labels& y_val, std::size_t n_p,
                    std::span<const double> gamma_grid, std::size_t budget, Rng& rng, const CRbfnOptions& opt = {},
                    int n_classes = 0);

}  // namespace distlearn
