#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distlearn/bench.hpp"
#include "distlearn/data.hpp"

namespace fs = std::filesystem;
using namespace distlearn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

void save_dataset(const Dataset& ds, const fs::path& out) {
    if (out.extension() == ".csv")
        save_csv(ds, out);
    else
        save_libsvm(ds, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-distribution learning benchmarks"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run every cell of an experiment config");
    std::string run_config;
    std::size_t workers = 0;
    bool quiet = false;
    run->add_option("--config", run_config, "Experiment config (JSON)")->required();
    run->add_option("--workers", workers, "Worker threads (default: DISTLEARN_WORKERS or all cores)");
    run->add_flag("--quiet", quiet, "No progress output");

    auto* rep = app.add_subcommand("report", "Rank table, tests and figures from a results file");
    std::string input, out_dir, metric;
    std::size_t top = 0;
    rep->add_option("--input", input, "results.csv")->required();
    rep->add_option("--friedman-top", top, "Friedman over the K best methods by mean rank");
    rep->add_option("--out", out_dir, "Directory for figures and summaries (default: next to the input)");
    rep->add_option("--metric", metric, "Metric column to rank (default: the task metric)");

    auto* data = app.add_subcommand("datasets", "Synthetic dataset generators");
    data->require_subcommand(1);
    auto* blobs = data->add_subcommand("make-blobs", "Isotropic Gaussian blobs");
    std::size_t n = 300, dim = 2;
    int k = 3;
    double spread = 1.0;
    std::uint64_t seed = 0;
    std::string out;
    blobs->add_option("--n", n, "Instances");
    blobs->add_option("--k", k, "Components");
    blobs->add_option("--dim", dim, "Dimensions");
    blobs->add_option("--spread", spread, "Component standard deviation");
    blobs->add_option("--seed", seed, "RNG seed");
    blobs->add_option("--out", out, "Output file (.csv or libsvm)")->required();
    auto* make = data->add_subcommand("make", "Any named generator");
    std::string kind;
    std::vector<std::string> params;
    make->add_option("--kind", kind, "blobs, interleaved, rings, checker or imbalanced")->required();
    make->add_option("--param", params, "key=value, repeatable");
    make->add_option("--seed", seed, "RNG seed");
    make->add_option("--out", out, "Output file (.csv or libsvm)")->required();

    auto* val = app.add_subcommand("validate", "Check a config without running it");
    std::string val_config;
    val->add_option("--config", val_config, "Experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            bench::ExperimentConfig cfg;
            try {
                cfg = bench::load_config(run_config);
            } catch (const bench::ConfigError& e) {
                std::cerr << e.what() << '\n';
                return kExitConfig;
            }
            bench::RunOptions opt;
            opt.workers = workers;
            opt.log = quiet ? nullptr : &std::cerr;
            bench::RunSummary s;
            try {
                s = bench::run(cfg, opt);
            } catch (const bench::ConfigError& e) {
                std::cerr << e.what() << '\n';
                return kExitConfig;
            }
            std::cout << "computed " << s.computed << ", skipped " << s.skipped << ", failed " << s.failed << "\n"
                      << "results: " << s.results.string() << "\nmanifest: " << s.manifest.string() << '\n';
            return s.failed ? kExitPartial : 0;
        }
        if (*rep) {
            bench::ReportOptions opt;
            if (top) opt.friedman_top = top;
            if (!metric.empty()) opt.metric = metric;
            opt.out_dir = out_dir.empty() ? fs::path(input).parent_path() / "report" : fs::path(out_dir);
            try {
                const auto r = bench::report(input, opt);
                std::cout << r.text;
                for (const auto& f : r.files) std::cout << "wrote " << f.string() << '\n';
            } catch (const bench::IncompleteResults& e) {
                std::cerr << e.what() << '\n';
                for (const auto& g : e.gaps()) std::cerr << "  missing: " << g << '\n';
                return kExitPartial;
            }
            return 0;
        }
        if (*blobs) {
            Rng rng(seed);
            Dataset ds = make_blobs(n, k, dim, spread, rng);
            save_dataset(ds, out);
            std::cout << "wrote " << ds.size() << " instances to " << out << '\n';
            return 0;
        }
        if (*make) {
            std::map<std::string, double> p;
            for (const auto& kv : params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    std::cerr << "--param expects key=value, got '" << kv << "'\n";
                    return kExitConfig;
                }
                p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            }
            Rng rng(seed);
            Dataset ds = make_synthetic(kind, p, rng);
            save_dataset(ds, out);
            std::cout << "wrote " << ds.size() << " instances to " << out << '\n';
            return 0;
        }
        if (*val) {
            try {
                const auto cfg = bench::load_config(val_config);
                const auto problems = bench::validate(cfg);
                for (const auto& pr : problems) std::cerr << pr << '\n';
                if (!problems.empty()) return kExitConfig;
                std::cout << "ok: " << cfg.datasets.size() * cfg.sizes.size() * cfg.methods.size() * cfg.trials << " cells\n";
                return 0;
            } catch (const bench::ConfigError& e) {
                std::cerr << e.what() << '\n';
                return kExitConfig;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
