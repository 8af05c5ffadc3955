#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "distlearn/bench.hpp"
#include "distlearn/coas.hpp"
#include "distlearn/data.hpp"
#include "distlearn/evalstats.hpp"
#include "distlearn/expclust.hpp"
#include "distlearn/learners.hpp"
#include "distlearn/prototypes.hpp"

namespace py = pybind11;
using namespace distlearn;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

Labels to_labels(const IntArray& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D label array");
    return Labels(a.data(), a.data() + a.size());
}

DoubleArray from_matrix(const Matrix& m) {
    DoubleArray out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

template <typename T>
py::array_t<T> from_vector(const std::vector<T>& v) {
    py::array_t<T> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::tuple dataset_tuple(const Dataset& d) { return py::make_tuple(from_matrix(d.X), from_vector(d.y)); }

py::dict test_dict(const TestResult& r) {
    py::dict d;
    d["statistic"] = r.statistic;
    d["p_value"] = r.p_value;
    d["n"] = r.n_effective;
    d["exact"] = r.method == PMethod::exact;
    d["tie_corrected"] = r.tie_corrected;
    return d;
}

RankTable rank_table(const DoubleArray& values, bool higher_is_better) {
    RankTable t;
    t.values = to_matrix(values);
    t.orientation = higher_is_better ? Orientation::higher_better : Orientation::lower_better;
    for (std::size_t i = 0; i < t.values.rows(); ++i) t.rows.push_back(std::to_string(i));
    for (std::size_t j = 0; j < t.values.cols(); ++j) t.methods.push_back(std::to_string(j));
    return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Training-distribution learning: COAS samplers, size-constrained learners and rank statistics";

    m.def(
        "make_synthetic",
        [](const std::string& kind, const std::map<std::string, double>& params, std::uint64_t seed) {
            Rng r(seed);
            return dataset_tuple(make_synthetic(kind, params, r));
        },
        py::arg("kind"), py::arg("params") = std::map<std::string, double>{}, py::arg("seed") = 0,
        "Named synthetic generator; returns (X, y).");
    m.def("load_libsvm", [](const std::filesystem::path& p) { return dataset_tuple(load_libsvm(p)); }, py::arg("path"));
    m.def(
        "load_csv", [](const std::filesystem::path& p, int label_column) { return dataset_tuple(load_csv(p, label_column)); },
        py::arg("path"), py::arg("label_column") = -1);

    m.def(
        "f1_macro", [](const IntArray& t, const IntArray& p, int c) { return f1_macro(to_labels(t), to_labels(p), c); },
        py::arg("y_true"), py::arg("y_pred"), py::arg("n_classes"));
    m.def(
        "wilcoxon",
        [](const DoubleArray& a, const DoubleArray& b) {
            if (a.ndim() != 1 || b.ndim() != 1) throw std::invalid_argument("expected 1-D arrays");
            return test_dict(wilcoxon_signed_rank({a.data(), static_cast<std::size_t>(a.size())},
                                                  {b.data(), static_cast<std::size_t>(b.size())}));
        },
        py::arg("a"), py::arg("b"), "Two-sided Wilcoxon signed-rank test on paired samples.");
    m.def(
        "friedman", [](const DoubleArray& v, bool hib) { return test_dict(friedman_test(rank_table(v, hib))); },
        py::arg("values"), py::arg("higher_is_better") = true, "Friedman test over a rows x methods table.");
    m.def(
        "mean_ranks", [](const DoubleArray& v, bool hib) { return from_vector(mean_ranks(rank_table(v, hib))); },
        py::arg("values"), py::arg("higher_is_better") = true);

    m.def(
        "kmeans",
        [](const DoubleArray& X, int k, std::uint64_t seed, int restarts) {
            Rng r(seed);
            const auto c = kmeans_fit(to_matrix(X), k, r, restarts);
            return py::make_tuple(from_matrix(c.centroids), from_vector(c.assignments), c.cost);
        },
        py::arg("X"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 10,
        "Returns (centroids, assignments, cost).");
    m.def(
        "explain_clusters",
        [](const DoubleArray& Xa, int k, const std::string& method, std::size_t budget, std::uint64_t seed) {
            const Matrix X = to_matrix(Xa);
            Rng r(seed);
            const auto ref = kmeans_fit(X, k, r, 10);
            ExplanationTree e;
            ClusteringEval ev;
            std::size_t runs = 0;
            if (method == "imm") {
                e = imm_fit(X, ref);
                ev = evaluate_explanation(e, X, ref);
            } else if (method == "cart" || method == "c_cart") {
                py::gil_scoped_release nogil;
                auto res = explain_with_cart(X, ref, method == "c_cart", budget, r);
                e = std::move(res.explanation);
                ev = res.eval;
                runs = res.training_runs;
            } else {
                throw std::invalid_argument("method must be imm, cart or c_cart");
            }
            py::dict d;
            d["cost_ratio"] = ev.cost_ratio;
            d["j_ex"] = ev.j_ex;
            d["j_km"] = ev.j_km;
            d["leaves"] = e.leaves();
            d["assignments"] = from_vector(e.assignments);
            d["training_runs"] = runs;
            return d;
        },
        py::arg("X"), py::arg("k"), py::arg("method") = "imm", py::arg("budget") = 100, py::arg("seed") = 0,
        "Threshold-tree explanation of a k-means clustering.");

    m.def(
        "fcnn1",
        [](const DoubleArray& X, const IntArray& y) {
            const auto res = fcnn1_fit(to_matrix(X), to_labels(y));
            py::list out;
            for (const auto& s : res.subsets) out.append(from_vector(s));
            return out;
        },
        py::arg("X"), py::arg("y"), "Nested FCNN1 prototype subsets (row indices).");
    m.def(
        "oracle_uncertainty",
        [](const DoubleArray& X, const IntArray& y, std::uint64_t seed, std::size_t trees) {
            Rng r(seed);
            return from_vector(coas::oracle_scores(to_matrix(X), to_labels(y), r, 0, trees).u);
        },
        py::arg("X"), py::arg("y"), py::arg("seed") = 0, py::arg("trees") = 100,
        "Rescaled out-of-bag uncertainty of an unconstrained random forest.");
    m.def(
        "random_forest_predict",
        [](const DoubleArray& X, const IntArray& y, const DoubleArray& X_test, std::size_t trees, int depth, std::uint64_t seed) {
            Rng r(seed);
            const auto f = rf_fit(to_matrix(X), to_labels(y), trees, depth, ClassWeighting::none, r);
            return from_vector(rf_predict(f, to_matrix(X_test)));
        },
        py::arg("X"), py::arg("y"), py::arg("X_test"), py::arg("trees") = 10, py::arg("max_depth") = -1, py::arg("seed") = 0);

    m.def(
        "run_config",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> output_dir, std::size_t workers) {
            auto cfg = bench::load_config(config);
            if (output_dir) cfg.output_dir = *output_dir;
            bench::RunOptions o;
            o.workers = workers;
            bench::RunSummary s;
            {
                py::gil_scoped_release nogil;
                s = bench::run(cfg, o);
            }
            py::dict d;
            d["computed"] = s.computed;
            d["skipped"] = s.skipped;
            d["failed"] = s.failed;
            d["results"] = s.results;
            d["manifest"] = s.manifest;
            return d;
        },
        py::arg("config"), py::arg("output_dir") = py::none(), py::arg("workers") = 1, "Runs a benchmark config.");
    m.def(
        "report",
        [](const std::filesystem::path& results, std::optional<std::size_t> friedman_top) {
            bench::ReportOptions o;
            o.friedman_top = friedman_top;
            const auto rep = bench::report(results, o);
            py::dict d;
            d["metric"] = rep.metric;
            d["methods"] = rep.table.methods;
            d["mean_ranks"] = rep.mean_ranks;
            d["rows"] = rep.table.rows;
            d["friedman"] = rep.friedman ? py::object(test_dict(*rep.friedman)) : py::none();
            py::dict w;
            for (const auto& t : rep.wilcoxon) w[py::make_tuple(t.a, t.b)] = test_dict(t.result);
            d["wilcoxon"] = w;
            d["notice"] = rep.notice;
            d["text"] = rep.text;
            return d;
        },
        py::arg("results"), py::arg("friedman_top") = py::none(), "Rank table and tests from a results file.");

    py::register_exception<bench::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<bench::IncompleteResults>(m, "IncompleteResults", PyExc_RuntimeError);
}
