#include "distlearn/expclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "distlearn/evalstats.hpp"

namespace distlearn {

double clustering_cost(const Matrix& X, std::span<const int> assignments, const Matrix& centroids) {
    if (assignments.size() != X.rows()) throw std::invalid_argument("clustering_cost: assignment length mismatch");
    if (X.rows() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto c = static_cast<std::size_t>(assignments[i]);
        if (c >= centroids.rows()) throw std::invalid_argument("clustering_cost: assignment out of range");
        s += squared_distance(X.row(i), centroids.row(c));
    }
    return s / static_cast<double>(X.rows());
}

double cost_ratio(double j_ex, double j_km) {
    if (j_km > 0.0) return j_ex / j_km;
    if (j_ex == 0.0) return 1.0;
    throw std::domain_error("cost_ratio: reference cost is zero but explanation cost is not");
}

ExplanationTree make_explanation(CartModel tree, const Matrix& X, const ClusteringModel& reference) {
    ExplanationTree e;
    e.leaf_of_node.assign(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf()) {
            e.leaf_of_node[i] = static_cast<int>(e.leaf_cluster.size());
            e.leaf_cluster.push_back(tree.nodes[i].label);
        }
    const std::size_t L = e.leaf_cluster.size(), D = X.cols();
    e.assignments.resize(X.rows());
    Matrix sums(L, D);
    std::vector<std::size_t> counts(L, 0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const int leaf = e.leaf_of_node[tree.apply(X.row(i))];
        e.assignments[i] = leaf;
        ++counts[static_cast<std::size_t>(leaf)];
        for (std::size_t j = 0; j < D; ++j) sums(static_cast<std::size_t>(leaf), j) += X(i, j);
    }
    e.leaf_centroids = Matrix(L, D);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t j = 0; j < D; ++j)
            e.leaf_centroids(l, j) = counts[l] ? sums(l, j) / static_cast<double>(counts[l])
                                               : reference.centroids(static_cast<std::size_t>(e.leaf_cluster[l]), j);
    e.node_mistakes.assign(tree.nodes.size(), 0);
    e.tree = std::move(tree);
    return e;
}

std::optional<ImmSplit> imm_best_split(const Matrix& X, std::span<const std::size_t> rows, std::span<const int> assignments,
                                       const Matrix& centroids, std::span<const int> centers) {
    std::optional<ImmSplit> best;
    std::vector<double> cand;
    std::vector<long> diff;
    for (std::size_t f = 0; f < X.cols(); ++f) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int c : centers) {
            lo = std::min(lo, centroids(static_cast<std::size_t>(c), f));
            hi = std::max(hi, centroids(static_cast<std::size_t>(c), f));
        }
        if (!(lo < hi)) continue;
        // Candidates: midpoints between consecutive distinct point and center values in [lo, hi].
        std::vector<double> vals;
        for (auto r : rows) {
            const double v = X(r, f);
            if (v >= lo && v <= hi) vals.push_back(v);
        }
        for (int c : centers) vals.push_back(centroids(static_cast<std::size_t>(c), f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        cand.clear();
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            double t = 0.5 * (vals[i] + vals[i + 1]);
            if (!(t < vals[i + 1])) t = vals[i];
            cand.push_back(t);
        }
        // A point is a mistake for thresholds t with min(x, mu) <= t < max(x, mu).
        diff.assign(cand.size() + 1, 0);
        for (auto r : rows) {
            const double x = X(r, f), mu = centroids(static_cast<std::size_t>(assignments[r]), f);
            if (x == mu) continue;
            const double a = std::min(x, mu), b = std::max(x, mu);
            const auto first = std::lower_bound(cand.begin(), cand.end(), a) - cand.begin();
            const auto last = std::lower_bound(cand.begin(), cand.end(), b) - cand.begin();
            if (first < last) {
                ++diff[static_cast<std::size_t>(first)];
                --diff[static_cast<std::size_t>(last)];
            }
        }
        long running = 0;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            running += diff[i];
            const auto m = static_cast<std::size_t>(running);
            if (!best || m < best->mistakes) best = ImmSplit{static_cast<int>(f), cand[i], m};
        }
    }
    return best;
}

ExplanationTree imm_fit(const Matrix& X, const ClusteringModel& reference) {
    const std::size_t k = reference.centroids.rows();
    if (k == 0) throw std::invalid_argument("imm_fit: reference has no centers");
    if (reference.assignments.size() != X.rows()) throw std::invalid_argument("imm_fit: assignment length mismatch");

    CartModel tree;
    tree.n_classes = static_cast<int>(k);
    tree.n_features = X.cols();
    tree.max_leaves = k;
    std::vector<std::size_t> mistakes_at;

    struct Work {
        int node;
        std::vector<std::size_t> rows;
        std::vector<int> centers;
    };
    std::vector<Work> stack;
    std::vector<std::size_t> all(X.rows());
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> all_centers(k);
    std::iota(all_centers.begin(), all_centers.end(), 0);
    tree.nodes.emplace_back();
    mistakes_at.push_back(0);
    stack.push_back({0, std::move(all), std::move(all_centers)});

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
        node.distribution.assign(k, 0.0);
        if (w.centers.size() == 1) {
            node.label = w.centers.front();
            node.distribution[static_cast<std::size_t>(node.label)] = 1.0;
            continue;
        }
        auto split = imm_best_split(X, w.rows, reference.assignments, reference.centroids, w.centers);
        if (!split) throw std::invalid_argument("imm_fit: centers coincide on every feature and cannot be separated");
        const auto f = static_cast<std::size_t>(split->feature);
        Work left, right;
        for (int c : w.centers) (reference.centroids(static_cast<std::size_t>(c), f) <= split->threshold ? left : right).centers.push_back(c);
        for (auto r : w.rows) {
            const bool x_left = X(r, f) <= split->threshold;
            const bool c_left = reference.centroids(static_cast<std::size_t>(reference.assignments[r]), f) <= split->threshold;
            if (x_left == c_left) (x_left ? left : right).rows.push_back(r);
        }
        const int depth = node.depth;
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.label = w.centers.front();
        mistakes_at[static_cast<std::size_t>(w.node)] = split->mistakes;
        left.node = static_cast<int>(tree.nodes.size());
        right.node = left.node + 1;
        tree.nodes[static_cast<std::size_t>(w.node)].left = left.node;
        tree.nodes[static_cast<std::size_t>(w.node)].right = right.node;
        TreeNode child;
        child.depth = depth + 1;
        tree.nodes.push_back(child);
        tree.nodes.push_back(child);
        mistakes_at.push_back(0);
        mistakes_at.push_back(0);
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    ExplanationTree e = make_explanation(std::move(tree), X, reference);
    e.node_mistakes = std::move(mistakes_at);
    return e;
}

ClusteringEval evaluate_explanation(const ExplanationTree& e, const Matrix& X, const ClusteringModel& reference) {
    ClusteringEval ev;
    ev.j_ex = clustering_cost(X, e.assignments, e.leaf_centroids);
    ev.j_km = reference.cost;
    ev.cost_ratio = cost_ratio(ev.j_ex, ev.j_km);
    return ev;
}

CartExplanation explain_with_cart(const Matrix& X, const ClusteringModel& reference, bool use_coas, std::size_t budget,
                                  Rng& rng, const ExplainOptions& options) {
    const std::size_t n = X.rows();
    const auto k = static_cast<std::size_t>(reference.k > 0 ? reference.k : static_cast<int>(reference.centroids.rows()));
    const int C = static_cast<int>(k);
    const Labels& labels = reference.assignments;

    CartExplanation out;
    CartModel model;
    if (!use_coas) {
        model = cart_fit(X, labels, k, ClassWeighting::balanced, rng, C);
        out.training_runs = 1;
    } else {
        coas::Config cfg;
        cfg.budget = budget;
        cfg.ns_hi = options.ns_hi ? options.ns_hi : n;
        cfg.ns_lo = options.ns_lo ? options.ns_lo : std::min<std::size_t>(400, (n + 1) / 2);
        cfg.ns_lo = std::min(cfg.ns_lo, cfg.ns_hi);
        cfg.optimizer = options.optimizer;
        cfg.n_classes = C;
        coas::TrainFn<CartModel> train = [&](const ModelSize& size, const Matrix& Xs, const Labels& ys, Rng& r) {
            return cart_fit(Xs, ys, std::get<MaxLeaves>(size).k, ClassWeighting::balanced, r, C);
        };
        coas::MetricFn<CartModel> metric = [&](const CartModel& m, const Matrix& Xv, const Labels& yv) {
            return f1_macro(yv, cart_predict(m, Xv), C);
        };
        auto res = coas::optimize<CartModel>(train, metric, X, labels, X, labels, MaxLeaves{k}, cfg, rng);
        out.training_runs = res.training_runs;
        out.learned = res.best_params;
        if (!res.best_model) throw std::runtime_error("explain_with_cart: every COAS trial failed");
        model = std::move(*res.best_model);
    }
    out.fewer_leaves = model.leaf_count() < k;
    out.explanation = make_explanation(std::move(model), X, reference);
    out.eval = evaluate_explanation(out.explanation, X, reference);
    return out;
}

}  // namespace distlearn
