#include "distlearn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "distlearn/expclust.hpp"
#include "distlearn/forest_pruning.hpp"
#include "distlearn/learners.hpp"
#include "distlearn/prototypes.hpp"

namespace distlearn::bench {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Task t) {
    switch (t) {
        case Task::expclust: return "expclust";
        case Task::proto: return "proto";
        case Task::rf: return "rf";
    }
    return "?";
}

Task parse_task(const std::string& s) {
    if (s == "expclust") return Task::expclust;
    if (s == "proto") return Task::proto;
    if (s == "rf") return Task::rf;
    throw ConfigError("unknown task '" + s + "' (expected expclust, proto or rf)");
}

const std::vector<std::string>& task_methods(Task t) {
    static const std::vector<std::string> expclust{"cart", "c_cart", "imm"};
    static const std::vector<std::string> proto{"fcnn1", "snc", "protonn", "km_rbfn", "c_rbfn"};
    static const std::vector<std::string> rf{"rf", "c_rf", "subforest", "ote"};
    switch (t) {
        case Task::expclust: return expclust;
        case Task::proto: return proto;
        case Task::rf: return rf;
    }
    return expclust;
}

std::string task_metric(Task t) { return t == Task::expclust ? "cost_ratio" : "f1_macro"; }

Orientation metric_orientation(const std::string& metric_name) {
    return metric_name == "cost_ratio" ? Orientation::lower_better : Orientation::higher_better;
}

std::size_t default_budget(Task t) {
    switch (t) {
        case Task::expclust: return 2000;
        case Task::proto: return 1000;
        case Task::rf: return 3000;
    }
    return 100;
}

// --- config ----------------------------------------------------------------

namespace {

ModelSize parse_size(const json& j, Task task) {
    if (j.is_string()) {
        try {
            return parse_model_size(j.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() > 0)) {
        const auto v = j.get<std::size_t>();
        if (task == Task::expclust) return MaxLeaves{v};
        if (task == Task::proto) return NumPrototypes{v};
        throw ConfigError("rf sizes need trees and depth, e.g. [2, 5] or \"forest=2x5\"");
    }
    if (j.is_array() && j.size() == 2 && task == Task::rf) return ForestShape{j[0].get<std::size_t>(), j[1].get<int>()};
    if (j.is_object() && task == Task::rf) return ForestShape{j.at("trees").get<std::size_t>(), j.at("depth").get<int>()};
    throw ConfigError("cannot read model size " + j.dump());
}

bool size_matches_task(const ModelSize& s, Task t) {
    switch (t) {
        case Task::expclust: return std::holds_alternative<MaxLeaves>(s);
        case Task::proto: return std::holds_alternative<NumPrototypes>(s);
        case Task::rf: return std::holds_alternative<ForestShape>(s);
    }
    return false;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"schema_version", "task",     "datasets",    "sizes",        "methods",
                                             "trials",         "budget",   "seed",        "output_dir",   "standardize",
                                             "subsample_n",    "gamma_grid", "optimizer", "oracle_trees", "pool_trees",
                                             "gp_noise",       "description"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

    ExperimentConfig cfg;
    try {
        cfg.schema_version = get_or<int>(j, "schema_version", 0);
        if (cfg.schema_version != kSchemaVersion)
            throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
        if (!j.contains("task")) throw ConfigError("missing 'task'");
        cfg.task = parse_task(j.at("task").get<std::string>());
        for (const auto& d : j.value("datasets", json::array())) {
            DatasetSpec s;
            if (d.is_string()) {
                s.path = d.get<std::string>();
            } else {
                s.name = get_or<std::string>(d, "name", "");
                s.synthetic = get_or<std::string>(d, "synthetic", "");
                if (d.contains("path")) s.path = d.at("path").get<std::string>();
                s.format = get_or<std::string>(d, "format", "");
                s.label_column = get_or<int>(d, "label_column", -1);
                if (d.contains("params"))
                    for (const auto& [k, v] : d.at("params").items()) s.params[k] = v.get<double>();
                if (d.contains("seed") && !d.at("seed").is_null()) s.seed = d.at("seed").get<std::uint64_t>();
            }
            if (!s.path.empty() && s.path.is_relative() && !base_dir.empty()) s.path = (base_dir / s.path).lexically_normal();
            if (s.name.empty()) s.name = !s.path.empty() ? s.path.stem().string() : s.synthetic;
            cfg.datasets.push_back(std::move(s));
        }
        for (const auto& s : j.value("sizes", json::array())) cfg.sizes.push_back(parse_size(s, cfg.task));
        cfg.methods = j.value("methods", std::vector<std::string>{});
        cfg.trials = get_or<std::size_t>(j, "trials", 5);
        cfg.budget = get_or<std::size_t>(j, "budget", 0);
        cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
        cfg.output_dir = get_or<std::string>(j, "output_dir", "results");
        if (cfg.output_dir.is_relative() && !base_dir.empty()) cfg.output_dir = (base_dir / cfg.output_dir).lexically_normal();
        cfg.standardize = get_or<bool>(j, "standardize", true);
        if (j.contains("subsample_n") && !j.at("subsample_n").is_null()) cfg.subsample_n = j.at("subsample_n").get<std::size_t>();
        cfg.gamma_grid = j.value("gamma_grid", std::vector<double>{});
        const auto opt = get_or<std::string>(j, "optimizer", "gp");
        if (opt == "gp")
            cfg.optimizer = Optimizer::gp_expected_improvement;
        else if (opt == "random")
            cfg.optimizer = Optimizer::random_search;
        else
            throw ConfigError("optimizer must be 'gp' or 'random'");
        cfg.gp_noise = get_or<double>(j, "gp_noise", coas::kObjectiveNoise);
        cfg.oracle_trees = get_or<std::size_t>(j, "oracle_trees", 100);
        cfg.pool_trees = get_or<std::size_t>(j, "pool_trees", 100);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["task"] = to_string(cfg.task);
    j["datasets"] = json::array();
    for (const auto& d : cfg.datasets) {
        json e{{"name", d.name}};
        if (!d.synthetic.empty()) {
            e["synthetic"] = d.synthetic;
            e["params"] = d.params;
            if (d.seed) e["seed"] = *d.seed;
        } else {
            e["path"] = d.path.string();
            if (!d.format.empty()) e["format"] = d.format;
            e["label_column"] = d.label_column;
        }
        j["datasets"].push_back(e);
    }
    j["sizes"] = json::array();
    for (const auto& s : cfg.sizes) j["sizes"].push_back(to_string(s));
    j["methods"] = cfg.methods;
    j["trials"] = cfg.trials;
    j["budget"] = cfg.effective_budget();
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    j["standardize"] = cfg.standardize;
    j["subsample_n"] = cfg.subsample_n ? json(*cfg.subsample_n) : json(nullptr);
    j["gamma_grid"] = cfg.gamma_grid.empty() ? default_gamma_grid() : cfg.gamma_grid;
    j["optimizer"] = cfg.optimizer == Optimizer::random_search ? "random" : "gp";
    j["gp_noise"] = cfg.gp_noise;
    j["oracle_trees"] = cfg.oracle_trees;
    j["pool_trees"] = cfg.pool_trees;
    return j.dump(2);
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> p;
    if (cfg.trials < 1) p.push_back("trials must be >= 1");
    if (!(cfg.gp_noise > 0.0) || !std::isfinite(cfg.gp_noise)) p.push_back("gp_noise must be positive");
    if (cfg.datasets.empty()) p.push_back("datasets must be nonempty");
    if (cfg.sizes.empty()) p.push_back("sizes must be nonempty");
    if (cfg.methods.empty()) p.push_back("methods must be nonempty");
    const auto& valid = task_methods(cfg.task);
    std::set<std::string> seen_methods;
    for (const auto& m : cfg.methods) {
        if (std::find(valid.begin(), valid.end(), m) == valid.end())
            p.push_back("method '" + m + "' is not valid for task " + to_string(cfg.task));
        if (!seen_methods.insert(m).second) p.push_back("method '" + m + "' listed twice");
    }
    std::set<std::string> seen_sizes;
    for (const auto& s : cfg.sizes) {
        if (!size_matches_task(s, cfg.task)) p.push_back("size " + to_string(s) + " does not fit task " + to_string(cfg.task));
        if (!seen_sizes.insert(to_string(s)).second) p.push_back("size " + to_string(s) + " listed twice");
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, MaxLeaves>) {
                    if (v.k < 2) p.push_back("leaf count must be >= 2");
                } else if constexpr (std::is_same_v<T, NumPrototypes>) {
                    if (v.n_p < 1) p.push_back("prototype count must be >= 1");
                } else {
                    if (v.num_trees < 1) p.push_back("num_trees must be >= 1");
                    if (v.max_depth < 1) p.push_back("max_depth must be >= 1");
                }
            },
            s);
    }
    std::set<std::string> names;
    for (const auto& d : cfg.datasets) {
        if (d.name.empty()) p.push_back("dataset without a name");
        if (!names.insert(d.name).second) p.push_back("dataset name '" + d.name + "' listed twice");
        if (d.name.find_first_of(",\"\n|") != std::string::npos) p.push_back("dataset name '" + d.name + "' has reserved characters");
        if (d.synthetic.empty() == d.path.empty()) p.push_back("dataset '" + d.name + "' needs exactly one of path or synthetic");
        if (!d.path.empty() && !fs::exists(d.path)) p.push_back("dataset file " + d.path.string() + " not found");
        if (!d.format.empty() && d.format != "libsvm" && d.format != "csv") p.push_back("format must be libsvm or csv");
    }
    for (double g : cfg.gamma_grid)
        if (!(g > 0.0)) p.push_back("gamma_grid values must be positive");
    if (cfg.subsample_n && *cfg.subsample_n < 2) p.push_back("subsample_n must be >= 2");
    if (cfg.pool_trees < 1) p.push_back("pool_trees must be >= 1");
    if (cfg.oracle_trees < 1) p.push_back("oracle_trees must be >= 1");
    if (cfg.task == Task::rf)
        for (const auto& s : cfg.sizes)
            if (auto f = std::get_if<ForestShape>(&s); f && f->num_trees > (cfg.pool_trees + 4) / 5)
                p.push_back("ote needs num_trees <= ceil(0.2 * pool_trees) for " + to_string(s));
    return p;
}

// --- records ---------------------------------------------------------------

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{"task",         "dataset",      "method",       "size", "trial",
                                               "seed",         "metric_name",  "metric_value", "wall_time_ms", "aux"};
    return cols;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string fmt(double v, const char* f = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string header_line() {
    std::string h;
    for (const auto& c : csv_columns()) h += (h.empty() ? "" : ",") + c;
    return h;
}

auto record_key(const Record& r) { return std::tie(r.task, r.dataset, r.method, r.size, r.trial, r.metric_name); }

}  // namespace

std::string format_record(const Record& r) {
    return csv_field(r.task) + "," + csv_field(r.dataset) + "," + csv_field(r.method) + "," + csv_field(r.size) + "," +
           std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + csv_field(r.metric_name) + "," +
           fmt(r.metric_value) + "," + fmt(r.wall_time_ms, "%.3f") + "," + csv_field(r.aux);
}

std::vector<Record> read_results(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file " + path.string());
    std::string line;
    std::vector<Record> out;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != header_line()) throw ParseError("unexpected results header", lineno);
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != csv_columns().size()) throw ParseError("results row has " + std::to_string(f.size()) + " fields", lineno);
        Record r;
        r.task = f[0];
        r.dataset = f[1];
        r.method = f[2];
        r.size = f[3];
        try {
            r.trial = std::stoul(f[4]);
            r.seed = std::stoull(f[5]);
            r.metric_name = f[6];
            r.metric_value = std::stod(f[7]);
            r.wall_time_ms = std::stod(f[8]);
        } catch (const std::logic_error&) {
            throw ParseError("bad number in results row", lineno);
        }
        r.aux = f[9];
        out.push_back(std::move(r));
    }
    return out;
}

void write_results(const fs::path& path, const std::vector<Record>& records) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << header_line() << '\n';
        for (const auto& r : records) out << format_record(r) << '\n';
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<Record> canonical_order(std::vector<Record> records) {
    std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return record_key(a) < record_key(b); });
    std::vector<Record> out;
    for (auto& r : records) {
        if (!out.empty() && record_key(out.back()) == record_key(r))
            out.back() = std::move(r);
        else
            out.push_back(std::move(r));
    }
    return out;
}

std::uint64_t cell_seed(std::uint64_t root, const std::string& dataset, const std::string& method, const std::string& size,
                        std::size_t trial) {
    return hash_seed(root, "cell|" + dataset + "|" + method + "|" + size + "|" + std::to_string(trial));
}

Dataset materialize(const DatasetSpec& spec, std::uint64_t root_seed) {
    Dataset ds;
    if (!spec.synthetic.empty()) {
        Rng rng(spec.seed ? *spec.seed : hash_seed(root_seed, "data|" + spec.name));
        ds = make_synthetic(spec.synthetic, spec.params, rng);
    } else {
        std::string format = spec.format;
        if (format.empty()) format = spec.path.extension() == ".csv" ? "csv" : "libsvm";
        ds = format == "csv" ? load_csv(spec.path, spec.label_column) : load_libsvm(spec.path);
    }
    ds.name = spec.name;
    return ds;
}

// --- cells -----------------------------------------------------------------

namespace {

std::string aux_params(const coas::SamplingParams& p) {
    return "a=" + fmt(p.a, "%.6g") + ";b=" + fmt(p.b, "%.6g") + ";n_s=" + std::to_string(p.n_s) + ";p_o=" + fmt(p.p_o, "%.6g");
}

struct Supervised {
    Matrix X_fit, X_val, X_train, X_test;
    Labels y_fit, y_val, y_train, y_test;
    int C = 0;
};

Dataset trial_data(const ExperimentConfig& cfg, const Dataset& ds, std::size_t trial) {
    if (!cfg.subsample_n || *cfg.subsample_n >= ds.size()) return ds;
    Rng rng(hash_seed(cfg.seed, "subsample|" + ds.name + "|" + std::to_string(trial)));
    return ds.subset(stratified_subsample(ds, *cfg.subsample_n, rng));
}

// 70/30 train/test, then 70/30 fit/validation inside train, shared by every
// method of the same dataset and trial.
Supervised prepare_supervised(const ExperimentConfig& cfg, const Dataset& full, std::size_t trial) {
    Dataset ds = trial_data(cfg, full, trial);
    Rng rng(hash_seed(cfg.seed, "split|" + ds.name + "|" + std::to_string(trial)));
    const Split sp = split(ds, {0.49, 0.21, 0.30}, rng, true);
    IndexList train = sp.train;
    train.insert(train.end(), sp.val.begin(), sp.val.end());
    if (cfg.standardize) ds = standardize(ds, train);
    Supervised s;
    s.C = ds.n_classes;
    s.X_fit = ds.X.select_rows(sp.train);
    s.y_fit = select(ds.y, sp.train);
    s.X_val = ds.X.select_rows(sp.val);
    s.y_val = select(ds.y, sp.val);
    s.X_train = ds.X.select_rows(train);
    s.y_train = select(ds.y, train);
    s.X_test = ds.X.select_rows(sp.test);
    s.y_test = select(ds.y, sp.test);
    return s;
}

BayesOptOptions bo_options(const ExperimentConfig& cfg) {
    BayesOptOptions o;
    o.method = cfg.optimizer;
    o.noise = cfg.gp_noise;
    return o;
}

std::pair<double, std::string> expclust_cell(const ExperimentConfig& cfg, const Dataset& full, const CellKey& cell,
                                             const std::string& size_text, Rng& rng) {
    Dataset ds = trial_data(cfg, full, cell.trial);
    if (cfg.standardize) {
        IndexList all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        ds = standardize(ds, all);
    }
    const auto k = std::get<MaxLeaves>(cfg.sizes[cell.size]).k;
    if (k > ds.size()) throw std::invalid_argument("k exceeds the number of instances");
    Rng ref_rng(hash_seed(cfg.seed, "kmeans|" + ds.name + "|" + size_text + "|" + std::to_string(cell.trial)));
    const ClusteringModel ref = kmeans_fit(ds.X, static_cast<int>(k), ref_rng);
    if (cell.method == "imm") {
        const auto e = imm_fit(ds.X, ref);
        const auto ev = evaluate_explanation(e, ds.X, ref);
        return {ev.cost_ratio, "leaves=" + std::to_string(e.leaves())};
    }
    ExplainOptions opt;
    opt.optimizer = bo_options(cfg);
    const bool use_coas = cell.method == "c_cart";
    const auto r = explain_with_cart(ds.X, ref, use_coas, cfg.effective_budget(), rng, opt);
    std::string aux = "leaves=" + std::to_string(r.explanation.leaves());
    if (r.learned) aux += ";" + aux_params(*r.learned);
    return {r.eval.cost_ratio, aux};
}

std::pair<double, std::string> proto_cell(const ExperimentConfig& cfg, const Dataset& full, const CellKey& cell, Rng& rng) {
    const Supervised s = prepare_supervised(cfg, full, cell.trial);
    const auto n_p = std::get<NumPrototypes>(cfg.sizes[cell.size]).n_p;
    const std::vector<double>& grid = cfg.gamma_grid.empty() ? default_gamma_grid() : cfg.gamma_grid;
    const int C = s.C;
    const auto score = [&](const Labels& pred) { return f1_macro(s.y_test, pred, C); };
    const std::string& m = cell.method;
    if (m == "fcnn1") {
        const auto r = fcnn1_fit(s.X_train, s.y_train);
        std::size_t best = 0;
        for (std::size_t i = 1; i < r.subsets.size(); ++i) {
            const auto d = [&](std::size_t j) {
                const auto sz = r.subsets[j].size();
                return sz > n_p ? sz - n_p : n_p - sz;
            };
            if (d(i) < d(best)) best = i;
        }
        const auto& sub = r.subsets[best];
        const Labels pred = one_nn_predict(s.X_train.select_rows(sub), select(s.y_train, sub), s.X_test);
        return {score(pred), "n_p_actual=" + std::to_string(sub.size()) + ";iteration=" + std::to_string(best + 1) +
                                 ";consistent=" + (r.consistent ? "1" : "0")};
    }
    if (m == "snc") {
        std::optional<SncModel> best_model;
        double best_v = -1.0;
        std::size_t g_index = 0;
        const auto choice = select_gamma(grid, [&](double g) {
            Rng r = rng.child(g_index++);
            SncModel model = snc_fit(s.X_fit, s.y_fit, n_p, g, r, {}, C);
            const double v = f1_macro(s.y_val, snc_predict(model, s.X_val), C);
            if (v > best_v) {
                best_v = v;
                best_model = std::move(model);
            }
            return v;
        });
        return {score(snc_predict(*best_model, s.X_test)), "gamma=" + fmt(choice.gamma, "%g")};
    }
    if (m == "protonn") {
        std::optional<ProtoNNModel> best_model;
        double best_v = -1.0;
        std::size_t g_index = 0;
        const auto choice = select_gamma(grid, [&](double g) {
            Rng r = rng.child(g_index++);
            ProtoNNModel model = protonn_fit(s.X_fit, s.y_fit, n_p, g, r, {}, C);
            const double v = f1_macro(s.y_val, protonn_predict(model, s.X_val), C);
            if (v > best_v) {
                best_v = v;
                best_model = std::move(model);
            }
            return v;
        });
        return {score(protonn_predict(*best_model, s.X_test)), "gamma=" + fmt(choice.gamma, "%g")};
    }
    if (m == "km_rbfn") {
        const auto r = km_rbfn_fit(s.X_fit, s.y_fit, s.X_val, s.y_val, n_p, grid, rng, C);
        return {score(rbfn_predict(r.model, s.X_test)), "gamma=" + fmt(r.choice.gamma, "%g")};
    }
    CRbfnOptions opt;
    opt.optimizer = bo_options(cfg);
    opt.oracle_trees = cfg.oracle_trees;
    const auto r = c_rbfn_fit(s.X_fit, s.y_fit, s.X_val, s.y_val, n_p, grid, cfg.effective_budget(), rng, opt, C);
    return {score(rbfn_predict(r.model, s.X_test)), "gamma=" + fmt(r.choice.gamma, "%g") + ";" + aux_params(r.learned)};
}

std::pair<double, std::string> rf_cell(const ExperimentConfig& cfg, const Dataset& full, const CellKey& cell, Rng& rng) {
    const Supervised s = prepare_supervised(cfg, full, cell.trial);
    const auto shape = std::get<ForestShape>(cfg.sizes[cell.size]);
    const int C = s.C;
    const auto score = [&](const Forest& f) { return f1_macro(s.y_test, rf_predict(f, s.X_test), C); };
    const std::string& m = cell.method;
    if (m == "rf") {
        const Forest f = rf_fit(s.X_train, s.y_train, shape.num_trees, shape.max_depth, ClassWeighting::balanced_subsample, rng, C);
        return {score(f), ""};
    }
    if (m == "c_rf") {
        coas::Config cc;
        cc.budget = cfg.effective_budget();
        cc.ns_hi = s.X_fit.rows();
        cc.ns_lo = std::min<std::size_t>(30, cc.ns_hi);
        cc.optimizer = bo_options(cfg);
        cc.oracle_trees = cfg.oracle_trees;
        cc.n_classes = C;
        coas::TrainFn<Forest> train = [&](const ModelSize&, const Matrix& Xs, const Labels& ys, Rng& r) {
            return rf_fit(Xs, ys, shape.num_trees, shape.max_depth, ClassWeighting::none, r, C);
        };
        coas::MetricFn<Forest> metric = [&](const Forest& f, const Matrix& Xv, const Labels& yv) {
            return f1_macro(yv, rf_predict(f, Xv), C);
        };
        auto res = coas::optimize<Forest>(train, metric, s.X_fit, s.y_fit, s.X_val, s.y_val, shape, cc, rng);
        if (!res.best_model) throw std::runtime_error("every COAS trial failed");
        return {score(*res.best_model), aux_params(res.best_params)};
    }
    Rng pool_rng = rng.child(0x9001);
    const Forest pool = rf_fit(s.X_fit, s.y_fit, cfg.pool_trees, shape.max_depth, ClassWeighting::balanced_subsample, pool_rng, C);
    if (m == "subforest") {
        const auto r = subforest_prune(pool, s.X_val, s.y_val, shape.num_trees);
        return {score(r.forest), ""};
    }
    PruneConfig pc;
    pc.initial_trees = cfg.pool_trees;
    pc.target_trees = shape.num_trees;
    const auto r = ote_prune(pool, s.X_fit, s.y_fit, s.X_val, s.y_val, pc);
    return {score(r.forest), "accepted=" + std::to_string(r.accepted)};
}

}  // namespace

std::vector<Record> run_cell(const ExperimentConfig& cfg, const std::vector<Dataset>& data, const CellKey& cell) {
    const Dataset& ds = data.at(cell.dataset);
    Record r;
    r.task = to_string(cfg.task);
    r.dataset = ds.name;
    r.method = cell.method;
    r.size = to_string(cfg.sizes.at(cell.size));
    r.trial = cell.trial;
    r.seed = cell_seed(cfg.seed, r.dataset, r.method, r.size, r.trial);
    Rng rng(r.seed);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::pair<double, std::string> out;
        switch (cfg.task) {
            case Task::expclust: out = expclust_cell(cfg, ds, cell, r.size, rng); break;
            case Task::proto: out = proto_cell(cfg, ds, cell, rng); break;
            case Task::rf: out = rf_cell(cfg, ds, cell, rng); break;
        }
        r.metric_name = task_metric(cfg.task);
        r.metric_value = out.first;
        r.aux = out.second;
    } catch (const std::exception& e) {
        r.metric_name = "error";
        r.metric_value = std::nan("");
        r.aux = e.what();
        std::replace(r.aux.begin(), r.aux.end(), '\n', ' ');
    }
    r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {r};
}

RunSummary run(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (auto problems = validate(cfg); !problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    std::vector<Dataset> data;
    for (const auto& spec : cfg.datasets) {
        try {
            data.push_back(materialize(spec, cfg.seed));
        } catch (const std::exception& e) {
            throw ConfigError("dataset '" + spec.name + "': " + e.what());
        }
    }

    fs::create_directories(cfg.output_dir);
    RunSummary summary;
    summary.results = cfg.output_dir / "results.csv";
    summary.manifest = cfg.output_dir / "manifest.json";
    {
        json man = json::parse(config_to_json(cfg));
        man["columns"] = csv_columns();
        man["datasets_loaded"] = json::array();
        for (const auto& d : data)
            man["datasets_loaded"].push_back({{"name", d.name}, {"n", d.size()}, {"dims", d.dims()}, {"classes", d.n_classes}});
        std::ofstream(summary.manifest) << man.dump(2) << '\n';
    }

    std::vector<Record> existing;
    if (fs::exists(summary.results)) existing = read_results(summary.results);
    std::set<std::tuple<std::string, std::string, std::string, std::size_t>> done;
    const std::string task = to_string(cfg.task);
    for (const auto& r : existing)
        if (r.task == task && !r.is_error()) done.insert({r.dataset, r.method, r.size, r.trial});

    std::vector<CellKey> todo;
    for (std::size_t d = 0; d < data.size(); ++d)
        for (std::size_t s = 0; s < cfg.sizes.size(); ++s)
            for (const auto& m : cfg.methods)
                for (std::size_t t = 0; t < cfg.trials; ++t) {
                    if (done.count({data[d].name, m, to_string(cfg.sizes[s]), t}))
                        ++summary.skipped;
                    else
                        todo.push_back({d, s, t, m});
                }

    if (!fs::exists(summary.results)) write_results(summary.results, {});
    std::size_t workers = opt.workers;
    if (workers == 0) {
        if (const char* env = std::getenv("DISTLEARN_WORKERS"); env && *env) workers = std::strtoul(env, nullptr, 10);
        if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::max<std::size_t>(1, std::min(workers, todo.size()));

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::vector<Record> fresh;
    std::ofstream out(summary.results, std::ios::app);
    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            auto recs = run_cell(cfg, data, todo[i]);
            std::lock_guard<std::mutex> lock(mu);
            for (const auto& r : recs) {
                out << format_record(r) << '\n';
                if (r.is_error()) {
                    ++summary.failed;
                    if (opt.log) *opt.log << "error: " << r.dataset << " " << r.method << " " << r.size << " trial " << r.trial << ": " << r.aux << '\n';
                }
                fresh.push_back(r);
            }
            out.flush();
            ++summary.computed;
            if (opt.log) *opt.log << "[" << summary.computed << "/" << todo.size() << "] " << recs.front().dataset << " "
                                  << recs.front().method << " " << recs.front().size << " trial " << recs.front().trial << '\n';
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    out.close();

    // Errors are dropped once a later run has filled the same cell.
    std::vector<Record> all = read_results(summary.results);
    std::set<std::tuple<std::string, std::string, std::string, std::string, std::size_t>> ok;
    for (const auto& r : all)
        if (!r.is_error()) ok.insert({r.task, r.dataset, r.method, r.size, r.trial});
    std::erase_if(all, [&](const Record& r) { return r.is_error() && ok.count({r.task, r.dataset, r.method, r.size, r.trial}); });
    write_results(summary.results, canonical_order(std::move(all)));
    return summary;
}

// --- report ----------------------------------------------------------------

IncompleteResults::IncompleteResults(std::vector<std::string> gaps)
    : std::runtime_error("results are incomplete: " + std::to_string(gaps.size()) + " missing cell(s)"), gaps_(std::move(gaps)) {}

namespace {

bool size_less(const std::string& a, const std::string& b) {
    try {
        const ModelSize x = parse_model_size(a), y = parse_model_size(b);
        if (x.index() != y.index()) return x.index() < y.index();
        if (auto p = std::get_if<MaxLeaves>(&x)) return p->k < std::get<MaxLeaves>(y).k;
        if (auto p = std::get_if<NumPrototypes>(&x)) return p->n_p < std::get<NumPrototypes>(y).n_p;
        const auto& p = std::get<ForestShape>(x);
        const auto& q = std::get<ForestShape>(y);
        return std::tie(p.num_trees, p.max_depth) < std::tie(q.num_trees, q.max_depth);
    } catch (const std::invalid_argument&) {
        return a < b;
    }
}

std::string safe_file(const std::string& s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::vector<double> nice_ticks(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::floor(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
    return t;
}

struct Frame {
    double w = 720, h = 420, left = 70, right = 170, top = 40, bottom = 60;
    double y0 = 0, y1 = 1;
    double px(std::size_t i, std::size_t n) const {
        const double span = w - left - right;
        return n <= 1 ? left + span / 2 : left + span * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    double py(double v) const { return top + (h - top - bottom) * (1.0 - (v - y0) / (y1 - y0)); }
};

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& y_label, const std::vector<double>& ticks) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << f.w / 2 - f.right / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
    for (double t : ticks) {
        const double y = f.py(t);
        o << "<line x1=\"" << f.left << "\" x2=\"" << f.w - f.right << "\" y1=\"" << y << "\" y2=\"" << y
          << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << f.left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(t, "%g") << "</text>\n";
    }
    o << "<line x1=\"" << f.left << "\" x2=\"" << f.left << "\" y1=\"" << f.top << "\" y2=\"" << f.h - f.bottom << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << f.left << "\" x2=\"" << f.w - f.right << "\" y1=\"" << f.h - f.bottom << "\" y2=\"" << f.h - f.bottom
      << "\" stroke=\"black\"/>\n";
    o << "<text transform=\"translate(18," << (f.top + f.h - f.bottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(y_label) << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels, const std::vector<Series>& series,
                           const std::string& y_label) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.mean.size(); ++i)
            for (double v : {s.mean[i], s.lower[i], s.upper[i]})
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    const auto ticks = nice_ticks(lo, hi);
    Frame f;
    f.y0 = ticks.front();
    f.y1 = std::max(ticks.back(), f.y0 + 1e-12);
    std::ostringstream o;
    axes(o, f, title, y_label, ticks);
    const std::size_t n = x_labels.size();
    for (std::size_t i = 0; i < n; ++i)
        o << "<text x=\"" << f.px(i, n) << "\" y=\"" << f.h - f.bottom + 18 << "\" text-anchor=\"middle\">" << xml_escape(x_labels[i])
          << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::ostringstream band, line;
        for (std::size_t i = 0; i < s.upper.size(); ++i) band << f.px(i, n) << "," << f.py(s.upper[i]) << " ";
        for (std::size_t i = s.lower.size(); i-- > 0;) band << f.px(i, n) << "," << f.py(s.lower[i]) << " ";
        for (std::size_t i = 0; i < s.mean.size(); ++i) line << f.px(i, n) << "," << f.py(s.mean[i]) << " ";
        o << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
        o << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < s.mean.size(); ++i)
            o << "<circle cx=\"" << f.px(i, n) << "\" cy=\"" << f.py(s.mean[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = f.top + 10 + 20.0 * static_cast<double>(k);
        o << "<line x1=\"" << f.w - f.right + 15 << "\" x2=\"" << f.w - f.right + 40 << "\" y1=\"" << ly << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
        o << "<text x=\"" << f.w - f.right + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
    }
    o << "<text x=\"" << f.w - f.right + 15 << "\" y=\"" << f.h - f.bottom + 18 << "\" font-size=\"10\">bands: 95% t-interval</text>\n";
    o << "</svg>\n";
    return o.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& values,
                          const std::string& y_label) {
    double hi = 0.0;
    for (double v : values)
        if (std::isfinite(v)) hi = std::max(hi, v);
    const auto ticks = nice_ticks(0.0, hi > 0 ? hi : 1.0);
    Frame f;
    f.right = 30;
    f.y0 = 0.0;
    f.y1 = ticks.back() > 0 ? ticks.back() : 1.0;
    std::ostringstream o;
    axes(o, f, title, y_label, ticks);
    const double span = f.w - f.left - f.right;
    const double slot = values.empty() ? span : span / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = f.left + slot * static_cast<double>(i) + slot * 0.15;
        const double y = f.py(values[i]);
        o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << slot * 0.7 << "\" height=\"" << f.py(0.0) - y << "\" fill=\""
          << kPalette[i % std::size(kPalette)] << "\"/>\n";
        o << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << y - 4 << "\" text-anchor=\"middle\">" << fmt(values[i], "%.3g") << "</text>\n";
        o << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << f.h - f.bottom + 18 << "\" text-anchor=\"middle\">" << xml_escape(labels[i])
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

Report build_report(const std::vector<Record>& records, const ReportOptions& opt) {
    Report rep;
    std::map<std::string, std::size_t> metric_counts;
    std::string task;
    for (const auto& r : records)
        if (!r.is_error()) {
            ++metric_counts[r.metric_name];
            task = r.task;
        }
    if (opt.metric)
        rep.metric = *opt.metric;
    else if (!task.empty())
        rep.metric = task_metric(parse_task(task));
    if (rep.metric.empty()) throw std::runtime_error("report: no successful records");

    std::vector<std::string> methods, datasets, sizes;
    std::size_t trials = 0;
    std::map<std::tuple<std::string, std::string, std::string>, std::map<std::size_t, double>> cells;
    std::set<std::pair<std::string, std::string>> seen_rows;
    const auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : records) {
        if (r.metric_name != rep.metric && !r.is_error()) continue;
        add_unique(methods, r.method);
        add_unique(datasets, r.dataset);
        add_unique(sizes, r.size);
        trials = std::max(trials, r.trial + 1);
        seen_rows.emplace(r.dataset, r.size);
        if (!r.is_error()) cells[{r.dataset, r.size, r.method}][r.trial] = r.metric_value;
    }
    std::sort(methods.begin(), methods.end());
    std::sort(datasets.begin(), datasets.end());
    std::sort(sizes.begin(), sizes.end(), size_less);

    // Only (dataset, size) pairs that appear in some record form pseudo-datasets.
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& d : datasets)
        for (const auto& s : sizes)
            if (seen_rows.count({d, s})) rows.emplace_back(d, s);
    for (const auto& [d, s] : rows)
        for (const auto& m : methods)
            for (std::size_t t = 0; t < trials; ++t) {
                auto it = cells.find({d, s, m});
                if (it == cells.end() || !it->second.count(t))
                    rep.gaps.push_back(d + " " + s + " " + m + " trial " + std::to_string(t));
            }
    if (!rep.gaps.empty()) throw IncompleteResults(rep.gaps);

    rep.table.methods = methods;
    rep.table.orientation = metric_orientation(rep.metric);
    rep.table.values = Matrix(rows.size(), methods.size());
    std::map<std::tuple<std::string, std::string, std::string>, Series> by_cell;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rep.table.rows.push_back(rows[i].first + "|" + rows[i].second);
        for (std::size_t j = 0; j < methods.size(); ++j) {
            const auto& v = cells[{rows[i].first, rows[i].second, methods[j]}];
            double sum = 0.0;
            for (const auto& [t, x] : v) sum += x;
            rep.table.values(i, j) = sum / static_cast<double>(v.size());
        }
    }
    std::ostringstream txt;
    txt << "metric: " << rep.metric << " (" << (rep.table.orientation == Orientation::lower_better ? "lower" : "higher")
        << " is better)\n";
    txt << "pseudo-datasets: " << rows.size() << ", trials per cell: " << trials << "\n\n";

    const std::size_t k = methods.size();
    if (k >= 2) {
        rep.mean_ranks = mean_ranks(rep.table);
    } else {
        rep.mean_ranks.assign(k, 1.0);
        rep.notice = "single method: means only, no tests";
    }
    txt << "method mean_rank mean_metric\n";
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) s += rep.table.values(i, j);
        txt << methods[j] << " " << fmt(rep.mean_ranks[j], "%.4f") << " " << fmt(s / static_cast<double>(rows.size()), "%.6g") << "\n";
    }
    txt << "\n";

    if (k == 2) {
        rep.notice = "only two methods: Friedman test skipped";
    } else if (k >= 3) {
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rep.mean_ranks[a] < rep.mean_ranks[b]; });
        const std::size_t top = std::min(k, opt.friedman_top.value_or(k - 1));
        std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
        std::sort(subset.begin(), subset.end());
        for (auto j : subset) rep.friedman_methods.push_back(methods[j]);
        if (subset.size() < 2 || rows.size() < 2) {
            rep.notice = "Friedman test needs at least two methods and two pseudo-datasets: skipped";
        } else {
            rep.friedman = friedman_test(rep.table, subset);
        }
    }
    if (rep.friedman) {
        txt << "Friedman over {";
        for (std::size_t i = 0; i < rep.friedman_methods.size(); ++i) txt << (i ? ", " : "") << rep.friedman_methods[i];
        txt << "}: statistic " << fmt(rep.friedman->statistic, "%.6g") << ", p = " << fmt(rep.friedman->p_value, "%.6g") << " ("
            << (rep.friedman->method == PMethod::exact ? "exact" : "asymptotic")
            << (rep.friedman->tie_corrected ? ", tie-corrected" : "") << ")\n";
    }
    if (!rep.notice.empty()) txt << rep.notice << "\n";

    if (k >= 2) {
        txt << "\npairwise Wilcoxon signed-rank (two-sided)\n";
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                std::vector<double> va, vb;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    va.push_back(rep.table.values(i, a));
                    vb.push_back(rep.table.values(i, b));
                }
                PairwiseTest pt{methods[a], methods[b], wilcoxon_signed_rank(va, vb)};
                txt << methods[a] << " vs " << methods[b] << ": W = " << fmt(pt.result.statistic, "%g") << ", n = " << pt.result.n_effective
                    << ", p = " << fmt(pt.result.p_value, "%.6g") << " (" << (pt.result.method == PMethod::exact ? "exact" : "asymptotic")
                    << ")\n";
                rep.wilcoxon.push_back(std::move(pt));
            }
    }
    rep.text = txt.str();

    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        for (const auto& d : datasets) {
            std::vector<std::string> xs;
            for (const auto& s : sizes)
                if (std::find(rows.begin(), rows.end(), std::make_pair(d, s)) != rows.end()) xs.push_back(s);
            if (xs.empty()) continue;
            std::vector<Series> series;
            for (const auto& m : methods) {
                Series se;
                se.name = m;
                for (const auto& s : xs) {
                    const auto& v = cells[{d, s, m}];
                    const double n = static_cast<double>(v.size());
                    double mean = 0.0, ss = 0.0;
                    for (const auto& [t, x] : v) mean += x / n;
                    for (const auto& [t, x] : v) ss += (x - mean) * (x - mean);
                    const double half = v.size() > 1 ? t_critical_975(v.size() - 1) * std::sqrt(ss / (n - 1.0) / n) : 0.0;
                    se.mean.push_back(mean);
                    se.lower.push_back(mean - half);
                    se.upper.push_back(mean + half);
                }
                series.push_back(std::move(se));
            }
            const fs::path p = opt.out_dir / (safe_file(d) + "_" + rep.metric + ".svg");
            std::ofstream(p) << svg_line_chart(d, xs, series, rep.metric);
            rep.files.push_back(p);
        }
        const fs::path bars = opt.out_dir / "mean_ranks.svg";
        std::ofstream(bars) << svg_bar_chart("mean rank (" + rep.metric + ")", methods, rep.mean_ranks, "mean rank");
        rep.files.push_back(bars);
        const fs::path text = opt.out_dir / "report.txt";
        std::ofstream(text) << rep.text;
        rep.files.push_back(text);

        json j;
        j["metric"] = rep.metric;
        j["methods"] = methods;
        j["mean_ranks"] = rep.mean_ranks;
        j["rows"] = rep.table.rows;
        j["notice"] = rep.notice;
        if (rep.friedman)
            j["friedman"] = {{"methods", rep.friedman_methods},
                             {"statistic", rep.friedman->statistic},
                             {"p_value", rep.friedman->p_value},
                             {"exact", rep.friedman->method == PMethod::exact}};
        j["wilcoxon"] = json::array();
        for (const auto& w : rep.wilcoxon)
            j["wilcoxon"].push_back({{"a", w.a}, {"b", w.b}, {"statistic", w.result.statistic}, {"p_value", w.result.p_value}, {"n", w.result.n_effective}});
        const fs::path js = opt.out_dir / "summary.json";
        std::ofstream(js) << j.dump(2) << '\n';
        rep.files.push_back(js);
    }
    return rep;
}

Report report(const fs::path& results, const ReportOptions& opt) { return build_report(read_results(results), opt); }

}  // namespace distlearn::bench
