#include "distlearn/forest_pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "distlearn/evalstats.hpp"

namespace distlearn {

namespace {

std::vector<Matrix> tree_probas(const Forest& f, const Matrix& X) {
    std::vector<Matrix> out;
    out.reserve(f.trees.size());
    for (const auto& t : f.trees) out.push_back(cart_predict_proba(t, X));
    return out;
}

// Mean of the summed probabilities plus an optional extra tree.
Matrix ensemble(const Matrix& sum, std::size_t count, const Matrix* extra) {
    Matrix p = sum;
    const double n = static_cast<double>(count + (extra ? 1 : 0));
    for (std::size_t k = 0; k < p.data().size(); ++k) {
        if (extra) p.data()[k] += extra->data()[k];
        p.data()[k] /= n;
    }
    return p;
}

void add_into(Matrix& sum, const Matrix& p) {
    for (std::size_t k = 0; k < sum.data().size(); ++k) sum.data()[k] += p.data()[k];
}

void check_validation(const Forest& f, const Matrix& X_val, const Labels& y_val) {
    if (f.trees.empty()) throw std::invalid_argument("pruning: empty forest");
    if (X_val.rows() == 0 || y_val.size() != X_val.rows()) throw std::invalid_argument("pruning: bad validation set");
    if (X_val.cols() != f.n_features) throw std::invalid_argument("pruning: dimension mismatch");
}

}  // namespace

double brier_score(const Matrix& proba, const Labels& y) {
    if (proba.rows() != y.size()) throw std::invalid_argument("brier_score: length mismatch");
    if (y.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < proba.rows(); ++i) {
        double rs = 0.0;
        for (std::size_t c = 0; c < proba.cols(); ++c) {
            const double t = static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0;
            rs += proba(i, c);
            total += (proba(i, c) - t) * (proba(i, c) - t);
        }
        if (std::abs(rs - 1.0) > 1e-9) throw std::invalid_argument("brier_score: row does not sum to 1");
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= proba.cols())
            throw std::invalid_argument("brier_score: label out of range");
    }
    return total / static_cast<double>(y.size());
}

std::vector<double> oob_accuracies(const Forest& f, const Matrix& X_train, const Labels& y_train) {
    if (f.oob_masks.size() != f.trees.size()) throw std::invalid_argument("oob_accuracies: forest has no OOB masks");
    std::vector<double> acc(f.trees.size(), 0.0);
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
        if (f.oob_masks[t].size() != X_train.rows()) throw std::invalid_argument("oob_accuracies: OOB mask length mismatch");
        std::size_t seen = 0, right = 0;
        for (std::size_t i = 0; i < X_train.rows(); ++i) {
            if (!f.oob_masks[t][i]) continue;
            ++seen;
            if (f.trees[t].predict_one(X_train.row(i)) == y_train[i]) ++right;
        }
        acc[t] = seen ? static_cast<double>(right) / static_cast<double>(seen) : 0.0;
    }
    return acc;
}

PruneResult ote_prune(const Forest& f, const Matrix& X_train, const Labels& y_train, const Matrix& X_val,
                      const Labels& y_val, const PruneConfig& cfg) {
    check_validation(f, X_val, y_val);
    if (!(cfg.m_fraction > 0.0 && cfg.m_fraction <= 1.0)) throw std::invalid_argument("ote_prune: m_fraction outside (0, 1]");
    const std::size_t n = f.trees.size();
    const auto M = std::min(n, static_cast<std::size_t>(std::ceil(cfg.m_fraction * static_cast<double>(n) - 1e-9)));
    if (cfg.target_trees < 1 || cfg.target_trees > M)
        throw std::invalid_argument("ote_prune: target_trees must be in [1, ceil(m_fraction * trees)]");

    const auto acc = oob_accuracies(f, X_train, y_train);
    std::vector<std::size_t> ranked(n);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return acc[a] > acc[b]; });
    ranked.resize(M);

    const auto probas = tree_probas(f, X_val);
    PruneResult res;
    std::vector<char> taken(M, 0);
    Matrix sum(X_val.rows(), static_cast<std::size_t>(f.n_classes));
    double current = 0.0;
    for (std::size_t r = 0; r < M && res.selected.size() < cfg.target_trees; ++r) {
        const Matrix& p = probas[ranked[r]];
        const double with = brier_score(ensemble(sum, res.selected.size(), &p), y_val);
        const bool accept = res.selected.empty() || (cfg.strict ? with < current : with <= current);
        if (!accept) continue;
        add_into(sum, p);
        res.selected.push_back(ranked[r]);
        res.step_scores.push_back(with);
        taken[r] = 1;
        current = with;
    }
    res.accepted = res.selected.size();
    for (std::size_t r = 0; r < M && res.selected.size() < cfg.target_trees; ++r) {
        if (taken[r]) continue;
        add_into(sum, probas[ranked[r]]);
        res.selected.push_back(ranked[r]);
        res.step_scores.push_back(brier_score(ensemble(sum, res.selected.size(), nullptr), y_val));
    }
    res.forest = subforest(f, res.selected);
    return res;
}

PruneResult subforest_prune(const Forest& f, const Matrix& X_val, const Labels& y_val, std::size_t target_trees) {
    check_validation(f, X_val, y_val);
    const std::size_t n = f.trees.size();
    if (target_trees < 1 || target_trees > n) throw std::invalid_argument("subforest_prune: target_trees must be in [1, trees]");
    const auto probas = tree_probas(f, X_val);
    PruneResult res;
    std::vector<char> used(n, 0);
    Matrix sum(X_val.rows(), static_cast<std::size_t>(f.n_classes));
    while (res.selected.size() < target_trees) {
        std::size_t best = n;
        double best_score = -1.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (used[t]) continue;
            const double s = f1_macro(y_val, argmax_rows(ensemble(sum, res.selected.size(), &probas[t])), f.n_classes);
            if (s > best_score) {
                best_score = s;
                best = t;
            }
        }
        used[best] = 1;
        add_into(sum, probas[best]);
        res.selected.push_back(best);
        res.step_scores.push_back(best_score);
    }
    res.accepted = res.selected.size();
    res.forest = subforest(f, res.selected);
    return res;
}

}  // namespace distlearn
