#include "distlearn/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "distlearn/evalstats.hpp"
#include "distlearn/learners.hpp"

namespace distlearn {

namespace {

constexpr double kLogEpsilon = -690.7755278982137;  // log(1e-300)

int class_count(const Labels& y, int n_classes) {
    int C = n_classes;
    for (int v : y) {
        if (v < 0) throw std::invalid_argument("negative class label");
        C = std::max(C, v + 1);
    }
    return C;
}

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive and finite");
}

// Splits `total` across classes in proportion to their counts (largest
// remainder), then moves units so every present class gets at least one.
std::vector<std::size_t> allocate_per_class(const std::vector<std::size_t>& counts, std::size_t total) {
    const std::size_t C = counts.size();
    const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    std::vector<std::size_t> alloc(C, 0);
    if (n == 0 || total == 0) return alloc;
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t given = 0;
    for (std::size_t c = 0; c < C; ++c) {
        const double q = static_cast<double>(total) * static_cast<double>(counts[c]) / static_cast<double>(n);
        alloc[c] = std::min(counts[c], static_cast<std::size_t>(std::floor(q)));
        given += alloc[c];
        rem.emplace_back(q - std::floor(q), c);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    while (given < total) {
        bool moved = false;
        for (const auto& [r, c] : rem) {
            if (given == total) break;
            if (alloc[c] < counts[c]) {
                ++alloc[c];
                ++given;
                moved = true;
            }
        }
        if (!moved) break;
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (counts[c] == 0 || alloc[c] > 0) continue;
        const auto donor = std::max_element(alloc.begin(), alloc.end()) - alloc.begin();
        if (alloc[static_cast<std::size_t>(donor)] <= 1) break;
        --alloc[static_cast<std::size_t>(donor)];
        ++alloc[c];
    }
    return alloc;
}

std::vector<IndexList> rows_by_class(const Labels& y, int C) {
    std::vector<IndexList> by(static_cast<std::size_t>(C));
    for (std::size_t i = 0; i < y.size(); ++i) by[static_cast<std::size_t>(y[i])].push_back(i);
    return by;
}

std::size_t nearest_row(std::span<const double> x, const Matrix& P) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < P.rows(); ++j) {
        const double d = squared_distance(x, P.row(j));
        if (d < bd) {
            bd = d;
            best = j;
        }
    }
    return best;
}

void check_fit_inputs(const Matrix& X, const Labels& y) {
    if (X.rows() == 0) throw std::invalid_argument("empty training set");
    if (y.size() != X.rows()) throw std::invalid_argument("label length mismatch");
}

}  // namespace

const std::vector<double>& default_gamma_grid() {
    static const std::vector<double> grid{0.001, 0.01, 0.1, 1.0, 10.0};
    return grid;
}

Labels one_nn_predict(const Matrix& prototypes, const Labels& proto_labels, const Matrix& X) {
    if (prototypes.rows() == 0) throw std::invalid_argument("one_nn_predict: no prototypes");
    if (X.cols() != prototypes.cols()) throw std::invalid_argument("one_nn_predict: dimension mismatch");
    Labels out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = proto_labels[nearest_row(X.row(i), prototypes)];
    return out;
}

// --- FCNN1 -----------------------------------------------------------------

bool is_consistent(const Matrix& X, const Labels& y, std::span<const std::size_t> subset) {
    if (subset.empty()) return X.rows() == 0;
    const Matrix P = X.select_rows(subset);
    const Labels pl = select(y, subset);
    return one_nn_predict(P, pl, X) == y;
}

FcnnResult fcnn1_fit(const Matrix& X, const Labels& y) {
    check_fit_inputs(X, y);
    const std::size_t n = X.rows(), D = X.cols();
    const int C = class_count(y, 0);
    const auto by = rows_by_class(y, C);

    IndexList delta;
    for (int c = 0; c < C; ++c) {
        const auto& rows = by[static_cast<std::size_t>(c)];
        if (rows.empty()) continue;
        std::vector<double> mean(D, 0.0);
        for (auto r : rows)
            for (std::size_t j = 0; j < D; ++j) mean[j] += X(r, j);
        for (auto& v : mean) v /= static_cast<double>(rows.size());
        std::size_t best = rows.front();
        double bd = std::numeric_limits<double>::infinity();
        for (auto r : rows) {
            const double d = squared_distance(X.row(r), mean);
            if (d < bd) {
                bd = d;
                best = r;
            }
        }
        delta.push_back(best);
    }

    FcnnResult res;
    IndexList S;
    std::vector<char> in_s(n, 0);
    std::vector<std::size_t> nearest(n, 0);  // position in S
    std::vector<double> nearest_d(n, std::numeric_limits<double>::infinity());
    while (!delta.empty()) {
        const std::size_t first_new = S.size();
        for (auto r : delta) {
            S.push_back(r);
            in_s[r] = 1;
        }
        res.subsets.push_back(S);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = first_new; s < S.size(); ++s) {
                const double d = squared_distance(X.row(i), X.row(S[s]));
                if (d < nearest_d[i]) {
                    nearest_d[i] = d;
                    nearest[i] = s;
                }
            }
        // Closest misclassified non-member of each prototype's cell.
        std::vector<std::size_t> rep(S.size(), n);
        std::vector<double> rep_d(S.size(), std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            if (in_s[i]) continue;
            const std::size_t s = nearest[i];
            if (y[i] == y[S[s]]) continue;
            if (nearest_d[i] < rep_d[s]) {
                rep_d[s] = nearest_d[i];
                rep[s] = i;
            }
        }
        delta.clear();
        for (auto r : rep)
            if (r < n && !in_s[r] && std::find(delta.begin(), delta.end(), r) == delta.end()) delta.push_back(r);
    }
    res.consistent = is_consistent(X, y, S);
    return res;
}

// --- SNC -------------------------------------------------------------------

double snc_loss(const Matrix& X, const Labels& y, const Matrix& prototypes, const Labels& proto_labels, double gamma,
                Matrix* grad) {
    check_gamma(gamma);
    const std::size_t n = X.rows(), m = prototypes.rows(), D = X.cols();
    if (prototypes.cols() != D) throw std::invalid_argument("snc_loss: dimension mismatch");
    if (proto_labels.size() != m || y.size() != n) throw std::invalid_argument("snc_loss: label length mismatch");
    if (grad) *grad = Matrix(m, D);
    if (n == 0) return 0.0;

    std::vector<double> logk(m);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx_all = -std::numeric_limits<double>::infinity(), mx_same = mx_all;
        for (std::size_t j = 0; j < m; ++j) {
            logk[j] = -gamma * squared_distance(X.row(i), prototypes.row(j));
            mx_all = std::max(mx_all, logk[j]);
            if (proto_labels[j] == y[i]) mx_same = std::max(mx_same, logk[j]);
        }
        double s_all = 0.0, s_same = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            s_all += std::exp(logk[j] - mx_all);
            if (proto_labels[j] == y[i]) s_same += std::exp(logk[j] - mx_same);
        }
        const double lse_all = mx_all + std::log(s_all);
        if (!std::isfinite(mx_same)) {
            // No prototype carries this label: the ratio is clamped at epsilon.
            total -= kLogEpsilon;
            continue;
        }
        const double lse_same = mx_same + std::log(s_same);
        total -= std::max(lse_same - lse_all, kLogEpsilon);
        if (!grad) continue;
        for (std::size_t j = 0; j < m; ++j) {
            const double q = std::exp(logk[j] - lse_all);
            const double r = proto_labels[j] == y[i] ? std::exp(logk[j] - lse_same) : 0.0;
            const double coef = 2.0 * gamma * (q - r);
            if (coef == 0.0) continue;
            for (std::size_t d = 0; d < D; ++d) (*grad)(j, d) += coef * (X(i, d) - prototypes(j, d));
        }
    }
    if (grad)
        for (auto& v : grad->data()) v /= static_cast<double>(n);
    return total / static_cast<double>(n);
}

IndexList stratified_prototype_rows(const Labels& y, int n_classes, std::size_t n_p, Rng& rng) {
    const int C = class_count(y, n_classes);
    if (n_p > y.size()) throw std::invalid_argument("stratified_prototype_rows: n_p exceeds the number of rows");
    auto by = rows_by_class(y, C);
    std::vector<std::size_t> counts;
    for (const auto& r : by) counts.push_back(r.size());
    const auto alloc = allocate_per_class(counts, n_p);
    IndexList out;
    for (std::size_t c = 0; c < by.size(); ++c) {
        rng.shuffle(by[c]);
        out.insert(out.end(), by[c].begin(), by[c].begin() + static_cast<std::ptrdiff_t>(alloc[c]));
    }
    return out;
}

SncModel snc_fit(const Matrix& X, const Labels& y, std::size_t n_p, double gamma, Rng& rng, const SncOptions& opt,
                 int n_classes) {
    check_fit_inputs(X, y);
    check_gamma(gamma);
    if (n_p < 1 || n_p > X.rows()) throw std::invalid_argument("snc_fit: n_p must be in [1, N]");
    SncModel m;
    m.gamma = gamma;
    m.n_classes = class_count(y, n_classes);
    const IndexList init = stratified_prototype_rows(y, m.n_classes, n_p, rng);
    m.prototypes = X.select_rows(init);
    m.proto_labels = select(y, init);

    Matrix grad;
    double loss = snc_loss(X, y, m.prototypes, m.proto_labels, gamma, &grad);
    m.loss_trace.push_back(loss);
    for (int it = 0; it < opt.max_iters; ++it) {
        double g2 = 0.0;
        for (double v : grad.data()) g2 += v * v;
        if (!(g2 > 0.0)) break;
        double step = opt.initial_step;
        bool accepted = false;
        Matrix trial(m.prototypes.rows(), m.prototypes.cols());
        for (int bt = 0; bt <= opt.max_backtrack; ++bt, step *= 0.5) {
            for (std::size_t k = 0; k < trial.data().size(); ++k)
                trial.data()[k] = m.prototypes.data()[k] - step * grad.data()[k];
            const double l = snc_loss(X, y, trial, m.proto_labels, gamma);
            if (l <= loss - opt.armijo * step * g2) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        m.prototypes = std::move(trial);
        loss = snc_loss(X, y, m.prototypes, m.proto_labels, gamma, &grad);
        m.loss_trace.push_back(loss);
    }
    return m;
}

Labels snc_predict(const SncModel& m, const Matrix& X) { return one_nn_predict(m.prototypes, m.proto_labels, X); }

// --- ProtoNN ---------------------------------------------------------------

double protonn_loss(const Matrix& X, const Labels& y, const Matrix& B, const Matrix& Z, double gamma, int n_classes,
                    Matrix* grad_B, Matrix* grad_Z) {
    check_gamma(gamma);
    const std::size_t n = X.rows(), m = B.rows(), D = X.cols();
    const auto C = static_cast<std::size_t>(n_classes);
    if (B.cols() != D || Z.rows() != C || Z.cols() != m || y.size() != n)
        throw std::invalid_argument("protonn_loss: shape mismatch");
    if (grad_B) *grad_B = Matrix(m, D);
    if (grad_Z) *grad_Z = Matrix(C, m);
    if (n == 0) return 0.0;
    std::vector<double> k(m), r(C), back(m);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) k[j] = rbf_kernel(X.row(i), B.row(j), gamma);
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += Z(c, j) * k[j];
            r[c] = s - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
            total += r[c] * r[c];
        }
        if (grad_Z)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t j = 0; j < m; ++j) (*grad_Z)(c, j) += 2.0 * r[c] * k[j];
        if (grad_B)
            for (std::size_t j = 0; j < m; ++j) {
                double a = 0.0;
                for (std::size_t c = 0; c < C; ++c) a += r[c] * Z(c, j);
                const double coef = 4.0 * gamma * a * k[j];
                for (std::size_t d = 0; d < D; ++d) (*grad_B)(j, d) += coef * (X(i, d) - B(j, d));
            }
    }
    const double inv = 1.0 / static_cast<double>(n);
    if (grad_B)
        for (auto& v : grad_B->data()) v *= inv;
    if (grad_Z)
        for (auto& v : grad_Z->data()) v *= inv;
    return total * inv;
}

namespace {

struct Adam {
    std::vector<double> m, v;
    std::size_t t = 0;
    explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
    void step(std::vector<double>& w, const std::vector<double>& g, const ProtoNNOptions& o) {
        const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t)), c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            w[i] -= o.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
        }
    }
};

}  // namespace

ProtoNNModel protonn_fit(const Matrix& X, const Labels& y, std::size_t n_p, double gamma, Rng& rng,
                         const ProtoNNOptions& opt, int n_classes) {
    check_fit_inputs(X, y);
    check_gamma(gamma);
    ProtoNNModel model;
    model.gamma = gamma;
    model.n_classes = class_count(y, n_classes);
    const auto C = static_cast<std::size_t>(model.n_classes);
    if (n_p < C) throw std::invalid_argument("protonn_fit: n_p must be at least the number of classes");
    if (opt.batch_size < 1) throw std::invalid_argument("protonn_fit: batch_size must be >= 1");

    // Label-stratified k-means initialization of B.
    const auto by = rows_by_class(y, model.n_classes);
    std::vector<std::size_t> counts;
    for (const auto& r : by) counts.push_back(r.size());
    const auto alloc = allocate_per_class(counts, std::min(n_p, X.rows()));
    Matrix B(0, X.cols());
    std::vector<int> owner;
    for (std::size_t c = 0; c < C; ++c) {
        if (alloc[c] == 0) continue;
        const Matrix Xc = X.select_rows(by[c]);
        Rng kr = rng.child(c);
        const ClusteringModel km = kmeans_fit(Xc, static_cast<int>(alloc[c]), kr, 3, 100);
        for (std::size_t j = 0; j < km.centroids.rows(); ++j) {
            B.append_row(km.centroids.row(j));
            owner.push_back(static_cast<int>(c));
        }
    }
    // Fewer rows than n_p: pad with random rows so B has n_p prototypes.
    while (B.rows() < n_p) {
        const std::size_t r = rng.index(X.rows());
        B.append_row(X.row(r));
        owner.push_back(y[r]);
    }
    const std::size_t m = B.rows();
    Matrix Z(C, m);
    for (std::size_t j = 0; j < m; ++j) Z(static_cast<std::size_t>(owner[j]), j) = 1.0 / static_cast<double>(m);

    model.prototypes = B;
    model.scores = Z;
    double best = protonn_loss(X, y, B, Z, gamma, model.n_classes);
    model.loss_trace.push_back(best);

    Adam adam_b(B.data().size()), adam_z(Z.data().size());
    IndexList order(X.rows());
    std::iota(order.begin(), order.end(), 0);
    Matrix gB, gZ;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix Xb = X.select_rows(idx);
            const Labels yb = select(y, idx);
            protonn_loss(Xb, yb, B, Z, gamma, model.n_classes, &gB, &gZ);
            ++adam_b.t;
            ++adam_z.t;
            adam_b.step(B.data(), gB.data(), opt);
            adam_z.step(Z.data(), gZ.data(), opt);
        }
        const double loss = protonn_loss(X, y, B, Z, gamma, model.n_classes);
        model.loss_trace.push_back(loss);
        if (loss < best) {
            best = loss;
            model.prototypes = B;
            model.scores = Z;
        }
    }
    return model;
}

Matrix protonn_class_scores(const ProtoNNModel& m, const Matrix& X) {
    if (X.cols() != m.prototypes.cols()) throw std::invalid_argument("protonn: dimension mismatch");
    const Matrix K = rbf_kernel_matrix(X, m.prototypes, m.gamma);
    const std::size_t C = m.scores.rows();
    Matrix S(X.rows(), C);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < K.cols(); ++j) s += m.scores(c, j) * K(i, j);
            S(i, c) = s;
        }
    return S;
}

Labels protonn_predict(const ProtoNNModel& m, const Matrix& X) { return argmax_rows(protonn_class_scores(m, X)); }

// --- RBF networks ----------------------------------------------------------

RbfnModel rbfn_fit(const Matrix& X, const Labels& y, const Matrix& prototypes, double gamma, double ridge, int n_classes) {
    check_fit_inputs(X, y);
    check_gamma(gamma);
    if (prototypes.rows() == 0) throw std::invalid_argument("rbfn_fit: no prototypes");
    if (prototypes.cols() != X.cols()) throw std::invalid_argument("rbfn_fit: dimension mismatch");
    if (ridge < 0.0) throw std::invalid_argument("rbfn_fit: ridge must be nonnegative");
    RbfnModel m;
    m.prototypes = prototypes;
    m.gamma = gamma;
    m.ridge = ridge;
    m.n_classes = class_count(y, n_classes);
    const auto C = static_cast<std::size_t>(m.n_classes);
    const Matrix K = rbf_kernel_matrix(X, prototypes, gamma);
    Matrix T(X.rows(), C, -1.0);
    for (std::size_t i = 0; i < X.rows(); ++i) T(i, static_cast<std::size_t>(y[i])) = 1.0;
    m.weights = ridge_least_squares_multi(K, T, ridge);
    return m;
}

Matrix rbfn_scores(const RbfnModel& m, const Matrix& X) {
    if (X.cols() != m.prototypes.cols()) throw std::invalid_argument("rbfn: dimension mismatch");
    const Matrix K = rbf_kernel_matrix(X, m.prototypes, m.gamma);
    const std::size_t C = m.weights.rows();
    Matrix S(X.rows(), C);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < K.cols(); ++j) s += m.weights(c, j) * K(i, j);
            S(i, c) = s;
        }
    return S;
}

Labels rbfn_predict(const RbfnModel& m, const Matrix& X) {
    const Matrix S = rbfn_scores(m, X);
    if (S.cols() == 2) {
        Labels out(S.rows());
        for (std::size_t i = 0; i < S.rows(); ++i) out[i] = S(i, 1) >= 0.0 ? 1 : 0;
        return out;
    }
    return argmax_rows(S);
}

GammaChoice select_gamma(std::span<const double> grid, const std::function<double(double)>& score) {
    if (grid.empty()) throw std::invalid_argument("select_gamma: empty grid");
    GammaChoice best;
    bool have = false;
    for (double g : grid) {
        const double s = score(g);
        if (!std::isfinite(s)) continue;
        if (!have || s > best.val_score || (s == best.val_score && g < best.gamma)) {
            best = {g, s};
            have = true;
        }
    }
    if (!have) best.gamma = *std::min_element(grid.begin(), grid.end());
    return best;
}

PrototypeFit km_rbfn_fit(const Matrix& X, const Labels& y, const Matrix& X_val, const Labels& y_val, std::size_t n_p,
                         std::span<const double> gamma_grid, Rng& rng, int n_classes) {
    check_fit_inputs(X, y);
    if (n_p < 1) throw std::invalid_argument("km_rbfn_fit: n_p must be >= 1");
    if (gamma_grid.empty()) throw std::invalid_argument("km_rbfn_fit: empty gamma grid");
    const int C = std::max(class_count(y, n_classes), class_count(y_val, 0));
    const ClusteringModel km = kmeans_fit(X, static_cast<int>(std::min(n_p, X.rows())), rng);
    PrototypeFit out;
    out.choice = select_gamma(gamma_grid, [&](double g) {
        return f1_macro(y_val, rbfn_predict(rbfn_fit(X, y, km.centroids, g, 1e-8, C), X_val), C);
    });
    out.model = rbfn_fit(X, y, km.centroids, out.choice.gamma, 1e-8, C);
    return out;
}

CRbfnFit c_rbfn_fit(const Matrix& X, const Labels& y, const Matrix& X_val, const Labels& y_val, std::size_t n_p,
                    std::span<const double> gamma_grid, std::size_t budget, Rng& rng, const CRbfnOptions& opt,
                    int n_classes) {
    check_fit_inputs(X, y);
    if (n_p < 1) throw std::invalid_argument("c_rbfn_fit: n_p must be >= 1");
    if (gamma_grid.empty()) throw std::invalid_argument("c_rbfn_fit: empty gamma grid");
    const int C = std::max(class_count(y, n_classes), class_count(y_val, 0));

    Rng oracle_rng = rng.child(0x0a5c1e);
    const coas::OracleScores scores = coas::oracle_scores(X, y, oracle_rng, C, opt.oracle_trees);

    coas::Config cfg;
    cfg.budget = budget;
    cfg.ns_hi = n_p;
    cfg.ns_lo = n_p > 1 ? n_p - 1 : 1;
    cfg.optimizer = opt.optimizer;
    cfg.scores = &scores;
    cfg.n_classes = C;

    CRbfnFit out;
    bool have = false;
    for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
        const double gamma = gamma_grid[g];
        coas::TrainFn<RbfnModel> train = [&](const ModelSize&, const Matrix& Xs, const Labels&, Rng&) {
            out.prototype_counts.push_back(Xs.rows());
            return rbfn_fit(X, y, Xs, gamma, opt.ridge, C);
        };
        coas::MetricFn<RbfnModel> metric = [&](const RbfnModel& m, const Matrix& Xv, const Labels& yv) {
            return f1_macro(yv, rbfn_predict(m, Xv), C);
        };
        Rng run_rng = rng.child(g);
        auto res = coas::optimize<RbfnModel>(train, metric, X, y, X_val, y_val, NumPrototypes{n_p}, cfg, run_rng);
        out.training_runs += res.training_runs;
        if (!res.best_model) continue;
        const double s = res.best_val_score;
        if (!have || s > out.choice.val_score || (s == out.choice.val_score && gamma < out.choice.gamma)) {
            have = true;
            out.choice = {gamma, s};
            out.model = std::move(*res.best_model);
            out.learned = res.best_params;
        }
    }
    if (!have) throw std::runtime_error("c_rbfn_fit: every COAS trial failed");
    return out;
}

}  // namespace distlearn
