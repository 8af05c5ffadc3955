#include "distlearn/coas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "distlearn/learners.hpp"

namespace distlearn {

std::string to_string(const ModelSize& size) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MaxLeaves>)
                return "leaves=" + std::to_string(s.k);
            else if constexpr (std::is_same_v<T, NumPrototypes>)
                return "protos=" + std::to_string(s.n_p);
            else
                return "forest=" + std::to_string(s.num_trees) + "x" + std::to_string(s.max_depth);
        },
        size);
}

ModelSize parse_model_size(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("model size '" + text + "': expected kind=value");
    const std::string kind = text.substr(0, eq), value = text.substr(eq + 1);
    try {
        if (kind == "leaves") return MaxLeaves{std::stoul(value)};
        if (kind == "protos") return NumPrototypes{std::stoul(value)};
        if (kind == "forest") {
            const auto x = value.find('x');
            if (x == std::string::npos) throw std::invalid_argument("missing 'x'");
            return ForestShape{std::stoul(value.substr(0, x)), std::stoi(value.substr(x + 1))};
        }
    } catch (const std::logic_error&) {
        throw std::invalid_argument("model size '" + text + "': bad number");
    }
    throw std::invalid_argument("model size '" + text + "': unknown kind");
}

namespace coas {

OracleScores rescale_uncertainty(std::span<const double> raw) {
    OracleScores s;
    s.u.assign(raw.size(), 0.5);
    if (raw.empty()) return s;
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double span = *hi - *lo;
    if (!(span > 1e-12)) return s;
    for (std::size_t i = 0; i < raw.size(); ++i) s.u[i] = std::clamp((raw[i] - *lo) / span, 0.0, 1.0);
    return s;
}

OracleScores oracle_scores(const Matrix& X, const Labels& y, Rng& rng, int n_classes, std::size_t n_trees) {
    int C = n_classes;
    for (int v : y) C = std::max(C, v + 1);
    {
        auto [lo, hi] = std::minmax_element(y.begin(), y.end());
        if (y.empty() || *lo == *hi) throw std::invalid_argument("oracle_scores: need at least two classes");
    }
    Forest f = rf_fit(X, y, n_trees, -1, ClassWeighting::none, rng, C);
    const std::size_t n = X.rows();
    // Identical rows share one group; a tree is out-of-bag for a row only if
    // no member of its group was drawn into that tree's bootstrap.
    std::map<std::vector<double>, std::size_t> group_of;
    std::vector<std::size_t> group(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = X.row(i);
        group[i] = group_of.try_emplace(std::vector<double>(r.begin(), r.end()), group_of.size()).first->second;
    }
    std::vector<std::vector<bool>> in_bag(f.trees.size(), std::vector<bool>(group_of.size(), false));
    for (std::size_t t = 0; t < f.trees.size(); ++t)
        for (std::size_t i = 0; i < n; ++i)
            if (!f.oob_masks[t][i]) in_bag[t][group[i]] = true;

    std::vector<double> raw(n);
    std::vector<double> p(static_cast<std::size_t>(C));
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(p.begin(), p.end(), 0.0);
        std::size_t votes = 0;
        for (bool oob_only : {true, false}) {
            for (std::size_t t = 0; t < f.trees.size(); ++t) {
                if (oob_only && in_bag[t][group[i]]) continue;
                const auto& d = f.trees[t].nodes[f.trees[t].apply(X.row(i))].distribution;
                for (std::size_t c = 0; c < d.size(); ++c) p[c] += d[c];
                ++votes;
            }
            if (votes > 0) break;
        }
        raw[i] = 1.0 - *std::max_element(p.begin(), p.end()) / static_cast<double>(votes);
    }
    return rescale_uncertainty(raw);
}

std::vector<double> beta_weights(const OracleScores& scores, double a, double b) {
    const std::size_t n = scores.u.size();
    std::vector<double> w(n);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::clamp(scores.u[i], 1e-6, 1.0 - 1e-6);
        w[i] = (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u);
        mx = std::max(mx, w[i]);
    }
    if (!std::isfinite(mx)) return {};
    double total = 0.0;
    for (auto& v : w) {
        v = std::exp(v - mx);
        total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total)) return {};
    for (auto& v : w) v /= total;
    return w;
}

Sample sample(const Matrix& X, const Labels& y, const OracleScores& scores, const SamplingParams& params, Rng& rng) {
    const std::size_t n = X.rows();
    if (n == 0 || y.size() != n || scores.u.size() != n) throw std::invalid_argument("coas::sample: size mismatch");
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw std::invalid_argument("coas::sample: Beta shapes must be positive");
    if (params.n_s < 1) throw std::invalid_argument("coas::sample: n_s must be >= 1");
    if (!(params.p_o >= 0.0 && params.p_o <= 1.0)) throw std::invalid_argument("coas::sample: p_o outside [0, 1]");

    Sample s;
    const auto n_uniform = static_cast<std::size_t>(std::floor(params.p_o * static_cast<double>(params.n_s)));
    s.indices.reserve(params.n_s);
    for (std::size_t d = 0; d < n_uniform; ++d) s.indices.push_back(rng.index(n));

    if (n_uniform < params.n_s) {
        const auto w = beta_weights(scores, params.a, params.b);
        if (w.empty()) {
            s.uniform_fallback = true;
            for (std::size_t d = n_uniform; d < params.n_s; ++d) s.indices.push_back(rng.index(n));
        } else {
            std::vector<double> cdf(n);
            std::partial_sum(w.begin(), w.end(), cdf.begin());
            for (std::size_t d = n_uniform; d < params.n_s; ++d) {
                const double u = rng.uniform() * cdf.back();
                auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                s.indices.push_back(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1));
            }
        }
    }
    s.X = X.select_rows(s.indices);
    s.y = select(y, s.indices);
    return s;
}

SearchSpace sampling_space(const Config& cfg) {
    SearchSpace space;
    space.dims.push_back({"a", ParamKind::real, cfg.shape_lo, cfg.shape_hi, ParamScale::log10});
    space.dims.push_back({"b", ParamKind::real, cfg.shape_lo, cfg.shape_hi, ParamScale::log10});
    // Equal bounds pin the sample size and drop it from the search.
    if (cfg.ns_lo < cfg.ns_hi)
        space.dims.push_back({"n_s", ParamKind::integer, static_cast<double>(cfg.ns_lo), static_cast<double>(cfg.ns_hi),
                          ParamScale::linear});
    space.dims.push_back({"p_o", ParamKind::real, 0.0, 1.0, ParamScale::linear});
    return space;
}

SamplingParams params_from_point(const std::vector<double>& point, const Config& cfg) {
    const bool pinned = cfg.ns_lo == cfg.ns_hi;
    if (point.size() != (pinned ? 3u : 4u)) throw std::invalid_argument("coas: sampling point has wrong dimension");
    SamplingParams p;
    p.a = point[0];
    p.b = point[1];
    p.n_s = pinned ? cfg.ns_lo : static_cast<std::size_t>(std::llround(point[2]));
    p.p_o = point.back();
    return p;
}

}  // namespace coas
}  // namespace distlearn
