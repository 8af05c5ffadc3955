#include "distlearn/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace distlearn {

int argmax(std::span<const double> v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

Labels argmax_rows(const Matrix& proba) {
    Labels out(proba.rows());
    for (std::size_t i = 0; i < proba.rows(); ++i) out[i] = argmax(proba.row(i));
    return out;
}

std::size_t CartModel::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int CartModel::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

std::size_t CartModel::apply(std::span<const double> x) const {
    if (x.size() != n_features) throw std::invalid_argument("CartModel: feature count mismatch");
    std::size_t at = 0;
    while (!nodes[at].is_leaf()) {
        const auto& n = nodes[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return at;
}

std::string CartModel::to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        os << i << " depth=" << n.depth;
        if (n.is_leaf()) {
            os << " leaf label=" << n.label << " dist=";
            for (std::size_t c = 0; c < n.distribution.size(); ++c) os << (c ? "," : "") << n.distribution[c];
        } else {
            os << " x[" << n.feature << "] <= " << n.threshold << " ? " << n.left << " : " << n.right;
        }
        os << '\n';
    }
    return os.str();
}

namespace {

struct SplitChoice {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Sum_c w_c^2 / W, the "purity" term of weighted Gini; W * gini = W - purity.
double purity(std::span<const double> w, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double v : w) s += v * v;
    return s / total;
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const Labels& y, int n_classes, std::span<const double> weight, const TreeGrowth& growth,
                Rng& rng)
        : X_(X), y_(y), C_(static_cast<std::size_t>(n_classes)), w_(weight), growth_(growth), rng_(rng) {}

    CartModel build() {
        CartModel m;
        m.n_classes = static_cast<int>(C_);
        m.n_features = X_.cols();
        m.max_leaves = growth_.max_leaves;

        std::vector<std::size_t> root_rows;
        for (std::size_t i = 0; i < X_.rows(); ++i)
            if (w_[i] > 0.0) root_rows.push_back(i);

        struct Pending {
            double gain;
            int node;
            bool operator<(const Pending& o) const {
                if (gain != o.gain) return gain < o.gain;
                return node > o.node;  // earlier node first on equal gain
            }
        };
        std::priority_queue<Pending> frontier;
        std::vector<std::vector<std::size_t>> rows_of;
        std::vector<SplitChoice> choice_of;

        auto make_node = [&](std::vector<std::size_t> rows, int depth) {
            TreeNode node;
            node.depth = depth;
            node.distribution = class_totals(rows);
            const double total = std::accumulate(node.distribution.begin(), node.distribution.end(), 0.0);
            if (total > 0.0)
                for (auto& v : node.distribution) v /= total;
            else if (C_ > 0)
                std::fill(node.distribution.begin(), node.distribution.end(), 1.0 / static_cast<double>(C_));
            node.label = argmax(node.distribution);
            const int id = static_cast<int>(m.nodes.size());
            m.nodes.push_back(std::move(node));
            SplitChoice sc;
            if (growth_.max_depth < 0 || depth < growth_.max_depth) sc = best_split(rows);
            rows_of.push_back(std::move(rows));
            choice_of.push_back(sc);
            if (sc.valid) frontier.push({sc.gain, id});
        };

        make_node(std::move(root_rows), 0);
        std::size_t leaves = 1;
        while (!frontier.empty() && leaves < growth_.max_leaves) {
            const int id = frontier.top().node;
            frontier.pop();
            const SplitChoice sc = choice_of[static_cast<std::size_t>(id)];
            std::vector<std::size_t> left, right;
            for (auto r : rows_of[static_cast<std::size_t>(id)])
                (X_(r, static_cast<std::size_t>(sc.feature)) <= sc.threshold ? left : right).push_back(r);
            rows_of[static_cast<std::size_t>(id)].clear();
            rows_of[static_cast<std::size_t>(id)].shrink_to_fit();
            const int depth = m.nodes[static_cast<std::size_t>(id)].depth + 1;
            m.nodes[static_cast<std::size_t>(id)].feature = sc.feature;
            m.nodes[static_cast<std::size_t>(id)].threshold = sc.threshold;
            m.nodes[static_cast<std::size_t>(id)].left = static_cast<int>(m.nodes.size());
            make_node(std::move(left), depth);
            m.nodes[static_cast<std::size_t>(id)].right = static_cast<int>(m.nodes.size());
            make_node(std::move(right), depth);
            ++leaves;
        }
        return m;
    }

private:
    std::vector<double> class_totals(const std::vector<std::size_t>& rows) const {
        std::vector<double> t(C_, 0.0);
        for (auto r : rows) t[static_cast<std::size_t>(y_[r])] += w_[r];
        return t;
    }

    SplitChoice best_split(const std::vector<std::size_t>& rows) {
        SplitChoice best;
        if (rows.size() < 2) return best;
        const auto parent = class_totals(rows);
        const double total = std::accumulate(parent.begin(), parent.end(), 0.0);
        const double parent_purity = purity(parent, total);
        // A pure node cannot improve.
        if (std::count_if(parent.begin(), parent.end(), [](double v) { return v > 0.0; }) < 2) return best;
        const double eps = 1e-12 * total;

        const std::size_t D = X_.cols();
        std::vector<std::size_t> features(D);
        std::iota(features.begin(), features.end(), 0);
        const bool subsample = growth_.max_features > 0 && growth_.max_features < D;
        if (subsample) rng_.shuffle(features);

        std::vector<std::size_t> order(rows);
        std::vector<double> left(C_), right(C_);
        std::size_t informative = 0;
        for (std::size_t f : features) {
            if (subsample && informative >= growth_.max_features) break;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = X_(a, f), vb = X_(b, f);
                return va < vb || (va == vb && a < b);
            });
            if (X_(order.front(), f) == X_(order.back(), f)) continue;  // constant here
            ++informative;
            std::fill(left.begin(), left.end(), 0.0);
            right = parent;
            double wl = 0.0;
            for (std::size_t p = 0; p + 1 < order.size(); ++p) {
                const std::size_t r = order[p];
                const auto c = static_cast<std::size_t>(y_[r]);
                left[c] += w_[r];
                right[c] -= w_[r];
                wl += w_[r];
                const double v = X_(r, f), next = X_(order[p + 1], f);
                if (v == next) continue;
                const double wr = total - wl;
                const double gain = purity(left, wl) + purity(right, wr) - parent_purity;
                if (!(gain > eps)) continue;
                double thr = 0.5 * (v + next);
                if (!(thr < next)) thr = v;  // midpoint rounded up to `next`
                const bool better = !best.valid || gain > best.gain * (1.0 + 1e-12) ||
                                    (gain >= best.gain * (1.0 - 1e-12) &&
                                     (static_cast<int>(f) < best.feature ||
                                      (static_cast<int>(f) == best.feature && thr < best.threshold)));
                if (better) {
                    best.valid = true;
                    best.feature = static_cast<int>(f);
                    best.threshold = thr;
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    const Labels& y_;
    std::size_t C_;
    std::span<const double> w_;
    const TreeGrowth& growth_;
    Rng& rng_;
};

int infer_classes(const Labels& y, int n_classes) {
    int c = n_classes;
    for (int v : y) {
        if (v < 0) throw std::invalid_argument("labels must be non-negative class ids");
        if (n_classes > 0 && v >= n_classes) throw std::invalid_argument("label exceeds n_classes");
        c = std::max(c, v + 1);
    }
    return std::max(c, 1);
}

}  // namespace

CartModel grow_tree(const Matrix& X, const Labels& y, int n_classes, std::span<const double> sample_weight,
                    const TreeGrowth& growth, Rng& rng) {
    if (X.rows() != y.size() || sample_weight.size() != y.size())
        throw std::invalid_argument("grow_tree: row count mismatch");
    if (X.rows() == 0) throw std::invalid_argument("grow_tree: no training rows");
    if (growth.max_leaves < 1) throw std::invalid_argument("grow_tree: max_leaves must be >= 1");
    TreeBuilder b(X, y, infer_classes(y, n_classes), sample_weight, growth, rng);
    return b.build();
}

std::vector<double> balanced_class_weights(const Labels& y, int n_classes, std::span<const double> multiplicity) {
    std::vector<double> count(static_cast<std::size_t>(n_classes), 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double m = multiplicity.empty() ? 1.0 : multiplicity[i];
        count[static_cast<std::size_t>(y[i])] += m;
        n += m;
    }
    const auto present = static_cast<double>(std::count_if(count.begin(), count.end(), [](double c) { return c > 0.0; }));
    std::vector<double> w(count.size(), 0.0);
    for (std::size_t c = 0; c < count.size(); ++c)
        if (count[c] > 0.0) w[c] = n / (present * count[c]);
    return w;
}

CartModel cart_fit(const Matrix& X, const Labels& y, std::size_t max_leaves, ClassWeighting weighting, Rng& rng,
                   int n_classes) {
    const int C = infer_classes(y, n_classes);
    std::vector<double> cw(static_cast<std::size_t>(C), 1.0);
    if (weighting != ClassWeighting::none) cw = balanced_class_weights(y, C);
    std::vector<double> w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) w[i] = cw[static_cast<std::size_t>(y[i])];
    TreeGrowth g;
    g.max_leaves = max_leaves;
    CartModel m = grow_tree(X, y, C, w, g, rng);
    m.class_weights = std::move(cw);
    return m;
}

Labels cart_predict(const CartModel& m, const Matrix& X) {
    if (X.cols() != m.n_features) throw std::invalid_argument("cart_predict: feature count mismatch");
    Labels out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = m.predict_one(X.row(i));
    return out;
}

Matrix cart_predict_proba(const CartModel& m, const Matrix& X) {
    if (X.cols() != m.n_features) throw std::invalid_argument("cart_predict_proba: feature count mismatch");
    Matrix P(X.rows(), static_cast<std::size_t>(m.n_classes));
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto& d = m.nodes[m.apply(X.row(i))].distribution;
        std::copy(d.begin(), d.end(), P.row(i).begin());
    }
    return P;
}

int nearest_centroid(std::span<const double> x, const Matrix& centroids) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = squared_distance(x, centroids.row(j));
        if (d < bd) {
            bd = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

namespace {

double assign_all(const Matrix& X, const Matrix& centroids, std::vector<int>& assign) {
    double cost = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        assign[i] = nearest_centroid(X.row(i), centroids);
        cost += squared_distance(X.row(i), centroids.row(static_cast<std::size_t>(assign[i])));
    }
    return cost / static_cast<double>(X.rows());
}

}  // namespace

ClusteringModel lloyd(const Matrix& X, Matrix centroids, int max_iter, std::vector<double>* cost_trace) {
    const std::size_t n = X.rows(), d = X.cols();
    const auto k = centroids.rows();
    std::vector<int> assign(n, -1), prev;
    double cost = assign_all(X, centroids, assign);
    if (cost_trace) cost_trace->push_back(cost);
    for (int it = 0; it < max_iter; ++it) {
        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums(c, j) += X(i, j);
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < d; ++j) centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: move it onto the point farthest from its own centroid.
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                const double dist = squared_distance(X.row(i), centroids.row(static_cast<std::size_t>(assign[i])));
                if (dist > fd) {
                    fd = dist;
                    far = i;
                }
            }
            taken[far] = true;
            auto src = X.row(far);
            std::copy(src.begin(), src.end(), centroids.row(c).begin());
        }
        prev = assign;
        cost = assign_all(X, centroids, assign);
        if (cost_trace) cost_trace->push_back(cost);
        if (assign == prev) break;
    }
    ClusteringModel m;
    m.k = static_cast<int>(k);
    m.centroids = std::move(centroids);
    m.assignments = std::move(assign);
    m.cost = cost;
    return m;
}

Matrix kmeans_plus_plus(const Matrix& X, int k, Rng& rng) {
    const std::size_t n = X.rows();
    Matrix c(static_cast<std::size_t>(k), X.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t pick = rng.index(n);
    for (int j = 0; j < k; ++j) {
        if (j > 0) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            if (total > 0.0) {
                double u = rng.uniform() * total;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    u -= d2[i];
                    if (u < 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.index(n);
            }
        }
        auto src = X.row(pick);
        std::copy(src.begin(), src.end(), c.row(static_cast<std::size_t>(j)).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(X.row(i), src));
    }
    return c;
}

ClusteringModel kmeans_fit(const Matrix& X, int k, Rng& rng, int n_restarts, int max_iter) {
    if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
    if (static_cast<std::size_t>(k) > X.rows()) throw std::invalid_argument("kmeans_fit: k exceeds number of points");
    ClusteringModel best;
    bool have = false;
    for (int r = 0; r < std::max(1, n_restarts); ++r) {
        auto m = lloyd(X, kmeans_plus_plus(X, k, rng), max_iter);
        if (!have || m.cost < best.cost) {
            best = std::move(m);
            have = true;
        }
    }
    return best;
}

Forest rf_fit(const Matrix& X, const Labels& y, std::size_t num_trees, int max_depth, ClassWeighting weighting, Rng& rng,
              int n_classes) {
    if (num_trees < 1) throw std::invalid_argument("rf_fit: num_trees must be >= 1");
    if (max_depth == 0 || max_depth < -1) throw std::invalid_argument("rf_fit: max_depth must be >= 1 or -1");
    if (X.rows() == 0 || X.rows() != y.size()) throw std::invalid_argument("rf_fit: bad training data");
    const int C = infer_classes(y, n_classes);
    const std::size_t n = X.rows();
    Forest f;
    f.num_trees = num_trees;
    f.max_depth = max_depth;
    f.n_classes = C;
    f.n_features = X.cols();
    TreeGrowth g;
    g.max_depth = max_depth;
    g.max_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));

    std::vector<double> global_cw(static_cast<std::size_t>(C), 1.0);
    if (weighting == ClassWeighting::balanced) global_cw = balanced_class_weights(y, C);

    for (std::size_t t = 0; t < num_trees; ++t) {
        Rng tree_rng = rng.child(t);
        std::vector<double> mult(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) mult[tree_rng.index(n)] += 1.0;
        std::vector<double> cw = global_cw;
        if (weighting == ClassWeighting::balanced_subsample) cw = balanced_class_weights(y, C, mult);
        std::vector<double> w(n);
        std::vector<bool> oob(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = mult[i] * cw[static_cast<std::size_t>(y[i])];
            oob[i] = mult[i] == 0.0;
        }
        CartModel tree = grow_tree(X, y, C, w, g, tree_rng);
        tree.class_weights = cw;
        f.trees.push_back(std::move(tree));
        f.oob_masks.push_back(std::move(oob));
    }
    return f;
}

Matrix rf_predict_proba(const Forest& f, const Matrix& X) {
    if (X.cols() != f.n_features) throw std::invalid_argument("rf_predict: feature count mismatch");
    Matrix P(X.rows(), static_cast<std::size_t>(f.n_classes));
    if (f.trees.empty()) return P;
    for (const auto& t : f.trees)
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const auto& d = t.nodes[t.apply(X.row(i))].distribution;
            for (std::size_t c = 0; c < d.size(); ++c) P(i, c) += d[c];
        }
    const double inv = 1.0 / static_cast<double>(f.trees.size());
    for (auto& v : P.data()) v *= inv;
    return P;
}

Labels rf_predict(const Forest& f, const Matrix& X) { return argmax_rows(rf_predict_proba(f, X)); }

Forest subforest(const Forest& f, std::span<const std::size_t> tree_idx) {
    Forest out;
    out.max_depth = f.max_depth;
    out.n_classes = f.n_classes;
    out.n_features = f.n_features;
    for (auto t : tree_idx) {
        out.trees.push_back(f.trees.at(t));
        if (t < f.oob_masks.size()) out.oob_masks.push_back(f.oob_masks[t]);
    }
    out.num_trees = out.trees.size();
    return out;
}

}  // namespace distlearn
