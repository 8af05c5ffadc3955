#include "distlearn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace distlearn {

namespace {

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) return false;
    // strtod accepts the full printf %.17g output, including exponents.
    std::string tmp(s);
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    for (auto& s : cells) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }
    return cells;
}

// Maps raw label strings to contiguous ids ordered by numeric value when every
// label is numeric, lexicographically otherwise.
void remap_labels(const std::vector<std::string>& raw, Dataset& ds) {
    std::vector<std::string> uniq(raw.begin(), raw.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    bool numeric = true;
    std::vector<double> values(uniq.size());
    for (std::size_t i = 0; i < uniq.size(); ++i) numeric = numeric && parse_double(uniq[i], values[i]);
    if (numeric) {
        std::vector<std::size_t> order(uniq.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<std::string> sorted;
        for (auto o : order) sorted.push_back(uniq[o]);
        uniq = std::move(sorted);
    }
    std::map<std::string, int> id;
    for (std::size_t i = 0; i < uniq.size(); ++i) id[uniq[i]] = static_cast<int>(i);
    ds.class_names = uniq;
    ds.n_classes = static_cast<int>(uniq.size());
    ds.y.clear();
    for (const auto& r : raw) ds.y.push_back(id.at(r));
}

// Largest-remainder apportionment of `total` into parts proportional to `fractions`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> fractions) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < fractions.size(); ++p) {
        const double ideal = fractions[p] * static_cast<double>(total);
        counts[p] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
        assigned += counts[p];
        rem.emplace_back(ideal - static_cast<double>(counts[p]), p);
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[rem[r % rem.size()].second];
    return counts;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.name = name;
    out.X = X.select_rows(idx);
    out.y = select(y, idx);
    out.n_classes = n_classes;
    out.feature_names = feature_names;
    out.class_names = class_names;
    return out;
}

Dataset load_libsvm(const std::filesystem::path& path, std::size_t n_features) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_libsvm: cannot open " + path.string());
    std::vector<std::string> raw_labels;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string label;
        if (!(ss >> label)) continue;
        double lv;
        if (!parse_double(label, lv)) throw ParseError("load_libsvm: bad label '" + label + "'", lineno);
        std::vector<std::pair<std::size_t, double>> entries;
        std::string tok;
        std::size_t prev = 0;
        while (ss >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError("load_libsvm: expected idx:value, got '" + tok + "'", lineno);
            std::size_t idx = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
            double val;
            if (ec != std::errc{} || p != tok.data() + colon || idx == 0)
                throw ParseError("load_libsvm: bad feature index in '" + tok + "'", lineno);
            if (!parse_double(std::string_view(tok).substr(colon + 1), val))
                throw ParseError("load_libsvm: bad feature value in '" + tok + "'", lineno);
            if (idx <= prev) throw ParseError("load_libsvm: indices must be ascending", lineno);
            prev = idx;
            max_index = std::max(max_index, idx);
            entries.emplace_back(idx - 1, val);
        }
        raw_labels.push_back(label);
        rows.push_back(std::move(entries));
    }
    if (rows.empty()) throw std::invalid_argument("load_libsvm: empty file " + path.string());
    const std::size_t dims = std::max<std::size_t>({n_features, max_index, 1});
    Dataset ds;
    ds.name = path.stem().string();
    ds.X = Matrix(rows.size(), dims);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto [j, v] : rows[i]) {
            if (j >= dims) throw ParseError("load_libsvm: index beyond declared width", i + 1);
            ds.X(i, j) = v;
        }
    remap_labels(raw_labels, ds);
    return ds;
}

void save_libsvm(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("save_libsvm: cannot open " + path.string());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.class_names.at(static_cast<std::size_t>(ds.y[i]));
        for (std::size_t j = 0; j < ds.dims(); ++j)
            if (ds.X(i, j) != 0.0) out << ' ' << (j + 1) << ':' << format_double(ds.X(i, j));
        out << '\n';
    }
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv: cannot open " + path.string());
    std::vector<std::vector<std::string>> table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        table.push_back(split_csv_line(line));
    }
    if (table.empty()) throw std::invalid_argument("load_csv: empty file " + path.string());
    const std::size_t width = table.front().size();
    if (width < 2) throw ParseError("load_csv: need at least one feature and a label column", 1);
    for (std::size_t r = 0; r < table.size(); ++r)
        if (table[r].size() != width) throw ParseError("load_csv: ragged row", r + 1);

    bool header = std::holds_alternative<std::string>(label_column);
    std::size_t label_idx = 0;
    if (header) {
        const auto& name = std::get<std::string>(label_column);
        auto it = std::find(table[0].begin(), table[0].end(), name);
        if (it == table[0].end()) throw std::invalid_argument("load_csv: no column named '" + name + "'");
        label_idx = static_cast<std::size_t>(it - table[0].begin());
    } else {
        int c = std::get<int>(label_column);
        int w = static_cast<int>(width);
        if (c < -w || c >= w) throw std::invalid_argument("load_csv: label column out of range");
        label_idx = static_cast<std::size_t>(c < 0 ? w + c : c);
        double tmp;
        for (std::size_t j = 0; j < width && !header; ++j)
            if (j != label_idx && !parse_double(table[0][j], tmp)) header = true;
    }

    Dataset ds;
    ds.name = path.stem().string();
    const std::size_t first = header ? 1 : 0;
    if (table.size() <= first) throw std::invalid_argument("load_csv: no data rows");
    if (header)
        for (std::size_t j = 0; j < width; ++j)
            if (j != label_idx) ds.feature_names.push_back(table[0][j]);
    ds.X = Matrix(table.size() - first, width - 1);
    std::vector<std::string> raw;
    for (std::size_t r = first; r < table.size(); ++r) {
        std::size_t col = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j == label_idx) continue;
            double v;
            if (!parse_double(table[r][j], v))
                throw ParseError("load_csv: non-numeric feature '" + table[r][j] + "'", r + 1);
            ds.X(r - first, col++) = v;
        }
        raw.push_back(table[r][label_idx]);
    }
    remap_labels(raw, ds);
    return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("save_csv: cannot open " + path.string());
    if (!ds.feature_names.empty()) {
        for (const auto& f : ds.feature_names) out << f << ',';
        out << "label\n";
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dims(); ++j) out << format_double(ds.X(i, j)) << ',';
        out << ds.class_names.at(static_cast<std::size_t>(ds.y[i])) << '\n';
    }
}

Split split(const Dataset& ds, std::array<double, 3> fractions, Rng& rng, bool stratified) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw std::invalid_argument("split: negative fraction");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");
    const std::size_t n = ds.size();
    const auto targets = apportion(n, fractions);

    Split out;
    std::array<IndexList*, 3> parts{&out.train, &out.val, &out.test};
    const auto live_parts = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));

    std::vector<IndexList> by_class(static_cast<std::size_t>(std::max(ds.n_classes, 1)));
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.y[i])].push_back(i);
    bool can_stratify = stratified;
    for (const auto& c : by_class)
        if (!c.empty() && c.size() < live_parts) can_stratify = false;

    if (!can_stratify) {
        IndexList perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::size_t pos = 0;
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t c = 0; c < targets[p]; ++c) parts[p]->push_back(perm[pos++]);
        out.stratified = false;
        return out;
    }

    // Per-class floors, then hand out the remaining slots by largest fractional
    // remainder while respecting the global part sizes.
    const std::size_t C = by_class.size();
    std::vector<std::array<std::size_t, 3>> take(C, {0, 0, 0});
    std::vector<std::size_t> class_left(C);
    std::array<std::size_t, 3> part_left = {targets[0], targets[1], targets[2]};
    struct Rem { double frac; std::size_t c, p; };
    std::vector<Rem> rems;
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t used = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            const double ideal = fractions[p] * static_cast<double>(by_class[c].size());
            take[c][p] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
            used += take[c][p];
            part_left[p] -= take[c][p];
            if (fractions[p] > 0.0) rems.push_back({ideal - static_cast<double>(take[c][p]), c, p});
        }
        class_left[c] = by_class[c].size() - used;
    }
    std::stable_sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) { return a.frac > b.frac; });
    for (const auto& r : rems)
        if (class_left[r.c] > 0 && part_left[r.p] > 0) {
            ++take[r.c][r.p];
            --class_left[r.c];
            --part_left[r.p];
        }
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < 3 && class_left[c] > 0; ++p)
            while (class_left[c] > 0 && part_left[p] > 0) {
                ++take[c][p];
                --class_left[c];
                --part_left[p];
            }

    for (std::size_t c = 0; c < C; ++c) {
        IndexList idx = by_class[c];
        rng.shuffle(idx);
        std::size_t pos = 0;
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t t = 0; t < take[c][p]; ++t) parts[p]->push_back(idx[pos++]);
    }
    for (auto* part : parts) rng.shuffle(*part);
    out.stratified = true;
    return out;
}

Split identity_split(const Dataset& ds) {
    Split s;
    s.train.resize(ds.size());
    std::iota(s.train.begin(), s.train.end(), 0);
    s.val = s.train;
    s.test = s.train;
    return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
    Matrix out = X;
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) out(i, j) = (X(i, j) - mean[j]) / scale[j];
    return out;
}

Standardizer fit_standardizer(const Matrix& X, std::span<const std::size_t> stats_from) {
    if (stats_from.empty()) throw std::invalid_argument("standardize: empty statistics index set");
    const std::size_t d = X.cols();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    const double n = static_cast<double>(stats_from.size());
    for (auto i : stats_from)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += X(i, j);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (auto i : stats_from)
        for (std::size_t j = 0; j < d; ++j) {
            const double z = X(i, j) - s.mean[j];
            var[j] += z * z;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / n);
        s.scale[j] = sd > 1e-12 * std::max(1.0, std::fabs(s.mean[j])) ? sd : 1.0;
    }
    return s;
}

Dataset standardize(const Dataset& ds, std::span<const std::size_t> stats_from, Standardizer* out) {
    Standardizer s = fit_standardizer(ds.X, stats_from);
    Dataset res = ds;
    res.X = s.apply(ds.X);
    if (out) *out = std::move(s);
    return res;
}

IndexList stratified_subsample(const Dataset& ds, std::size_t n, Rng& rng) {
    if (n >= ds.size()) {
        IndexList all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    const double f = static_cast<double>(n) / static_cast<double>(ds.size());
    Split s = split(ds, {f, 0.0, 1.0 - f}, rng, true);
    std::sort(s.train.begin(), s.train.end());
    return s.train;
}

namespace {

Dataset finish_synthetic(std::string name, Matrix X, Labels y, int classes) {
    Dataset ds;
    ds.name = std::move(name);
    ds.X = std::move(X);
    ds.y = std::move(y);
    ds.n_classes = classes;
    for (int c = 0; c < classes; ++c) ds.class_names.push_back(std::to_string(c));
    return ds;
}

double param(const std::map<std::string, double>& p, const std::string& key, double def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

}  // namespace

Dataset make_blobs(std::size_t n, int k, std::size_t dim, double spread, Rng& rng) {
    if (k < 1 || n < static_cast<std::size_t>(k)) throw std::invalid_argument("make_blobs: need n >= k >= 1");
    if (dim == 0) throw std::invalid_argument("make_blobs: dim must be positive");
    const double min_sep = 6.0 * spread;
    const double box = std::max(1.0, min_sep * 2.0 * std::pow(static_cast<double>(k), 1.0 / static_cast<double>(dim)));
    Matrix centers(static_cast<std::size_t>(k), dim);
    for (int c = 0; c < k; ++c) {
        for (int attempt = 0;; ++attempt) {
            for (std::size_t j = 0; j < dim; ++j) centers(c, j) = rng.uniform(-box, box);
            bool ok = true;
            for (int o = 0; o < c && ok; ++o) ok = std::sqrt(squared_distance(centers.row(c), centers.row(o))) >= min_sep;
            if (ok) break;
            if (attempt > 10000) {
                // Dense packing failed: fall back to a line with exact spacing.
                for (std::size_t j = 0; j < dim; ++j) centers(c, j) = j == 0 ? min_sep * c : 0.0;
                break;
            }
        }
    }
    Matrix X(n, dim);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % static_cast<std::size_t>(k));
        y[i] = c;
        for (std::size_t j = 0; j < dim; ++j) X(i, j) = centers(c, j) + spread * rng.normal();
    }
    return finish_synthetic("blobs", std::move(X), std::move(y), k);
}

Dataset make_synthetic(const std::string& kind, const std::map<std::string, double>& p, Rng& rng) {
    const auto n = static_cast<std::size_t>(param(p, "n", 400));
    const auto dim = static_cast<std::size_t>(param(p, "dim", 2));
    if (kind == "blobs")
        return make_blobs(n, static_cast<int>(param(p, "k", 3)), dim, param(p, "spread", 0.5), rng);

    if (kind == "interleaved") {
        // Long thin clusters stacked along the main diagonal, each stretched
        // along the anti-diagonal: well separated for Voronoi cells, awkward
        // for axis-aligned cuts.
        const int k = static_cast<int>(param(p, "k", 4));
        const double spread = param(p, "spread", 0.25);
        const double length = param(p, "length", 3.0);
        const double gap = param(p, "gap", 1.5);
        if (dim < 2) throw std::invalid_argument("interleaved: dim must be >= 2");
        Matrix X(n, dim);
        Labels y(n);
        const double r2 = 1.0 / std::sqrt(2.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = static_cast<int>(i % static_cast<std::size_t>(k));
            const double along = gap * c + spread * rng.normal();
            const double across = length * (rng.uniform() - 0.5) * (1.0 + 0.5 * (c % 2));
            X(i, 0) = r2 * (along - across);
            X(i, 1) = r2 * (along + across);
            for (std::size_t j = 2; j < dim; ++j) X(i, j) = spread * rng.normal();
            y[i] = c;
        }
        return finish_synthetic("interleaved", std::move(X), std::move(y), k);
    }

    if (kind == "rings") {
        const int classes = static_cast<int>(param(p, "classes", 2));
        const double noise = param(p, "noise", 0.15);
        Matrix X(n, std::max<std::size_t>(dim, 2));
        Labels y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
            const double r = 1.0 + c + noise * rng.normal();
            const double t = 2.0 * M_PI * rng.uniform();
            X(i, 0) = r * std::cos(t);
            X(i, 1) = r * std::sin(t);
            for (std::size_t j = 2; j < X.cols(); ++j) X(i, j) = noise * rng.normal();
            y[i] = c;
        }
        return finish_synthetic("rings", std::move(X), std::move(y), classes);
    }

    if (kind == "checker") {
        const int cells = static_cast<int>(param(p, "cells", 3));
        const double noise = param(p, "noise", 0.05);
        Matrix X(n, std::max<std::size_t>(dim, 2));
        Labels y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = rng.uniform(0.0, cells), b = rng.uniform(0.0, cells);
            const int ca = static_cast<int>(a), cb = static_cast<int>(b);
            X(i, 0) = a + noise * rng.normal();
            X(i, 1) = b + noise * rng.normal();
            for (std::size_t j = 2; j < X.cols(); ++j) X(i, j) = rng.uniform(0.0, cells);
            y[i] = (ca + cb) % 2;
        }
        return finish_synthetic("checker", std::move(X), std::move(y), 2);
    }

    if (kind == "imbalanced") {
        // Geometric class sizes with overlapping Gaussian classes, each class a
        // pair of sub-clusters.
        const int classes = static_cast<int>(param(p, "classes", 3));
        const double overlap = param(p, "overlap", 1.0);
        const double ratio = param(p, "ratio", 0.5);
        std::vector<double> w(static_cast<std::size_t>(classes));
        for (int c = 0; c < classes; ++c) w[c] = std::pow(ratio, c);
        const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
        Matrix centers(static_cast<std::size_t>(2 * classes), dim);
        for (std::size_t r = 0; r < centers.rows(); ++r)
            for (std::size_t j = 0; j < dim; ++j) centers(r, j) = rng.uniform(-2.0, 2.0);
        Matrix X(n, dim);
        Labels y(n);
        std::size_t pos = 0;
        for (int c = 0; c < classes; ++c) {
            std::size_t count = c + 1 == classes ? n - pos : static_cast<std::size_t>(std::max(2.0, std::round(n * w[c] / wsum)));
            for (std::size_t t = 0; t < count && pos < n; ++t, ++pos) {
                const std::size_t center = 2 * static_cast<std::size_t>(c) + (t % 2);
                for (std::size_t j = 0; j < dim; ++j) X(pos, j) = centers(center, j) + overlap * 0.5 * rng.normal();
                y[pos] = c;
            }
        }
        return finish_synthetic("imbalanced", std::move(X), std::move(y), classes);
    }

    throw std::invalid_argument("make_synthetic: unknown generator '" + kind + "'");
}

}  // namespace distlearn
