#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlearn/bayesopt.hpp"
#include "distlearn/coas.hpp"
#include "distlearn/data.hpp"
#include "distlearn/evalstats.hpp"

namespace distlearn::bench {

enum class Task { expclust, proto, rf };

std::string to_string(Task t);
Task parse_task(const std::string& s);

/// Methods accepted for each task.
const std::vector<std::string>& task_methods(Task t);
/// Metric recorded for each task and whether lower values are better.
std::string task_metric(Task t);
Orientation metric_orientation(const std::string& metric_name);
/// Optimization budget used when the config leaves it unset.
std::size_t default_budget(Task t);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dataset is either a file (libsvm or csv) or a named synthetic generator.
struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    std::string format;  // "libsvm" or "csv"; inferred from the extension when empty
    int label_column = -1;
    std::string synthetic;
    std::map<std::string, double> params;
    std::optional<std::uint64_t> seed;  // generator seed; derived from the root seed when absent
};

struct ExperimentConfig {
    int schema_version = 1;
    Task task = Task::expclust;
    std::vector<DatasetSpec> datasets;
    std::vector<ModelSize> sizes;
    std::vector<std::string> methods;
    std::size_t trials = 5;
    std::size_t budget = 0;  // 0: task default
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "results";
    bool standardize = true;
    std::optional<std::size_t> subsample_n;
    std::vector<double> gamma_grid;  // empty: the default grid
    Optimizer optimizer = Optimizer::gp_expected_improvement;
    double gp_noise = coas::kObjectiveNoise;
    std::size_t oracle_trees = 100;
    std::size_t pool_trees = 100;  // forest size pruned by subforest and ote

    std::size_t effective_budget() const { return budget ? budget : default_budget(task); }
};

constexpr int kSchemaVersion = 1;

/// Parses a JSON config. Relative dataset paths and output_dir resolve
/// against `base_dir`. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
/// Problems that make the config unusable; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& cfg);

struct Record {
    std::string task, dataset, method, size;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string metric_name;
    double metric_value = 0.0;
    double wall_time_ms = 0.0;
    std::string aux;

    bool is_error() const { return metric_name == "error"; }
};

const std::vector<std::string>& csv_columns();
std::string format_record(const Record& r);
std::vector<Record> read_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, const std::vector<Record>& records);
/// Orders records by (task, dataset, method, size, trial, metric) and keeps
/// the last record for each key.
std::vector<Record> canonical_order(std::vector<Record> records);

/// Seed of one cell: hash of the root seed with dataset, method, size and trial.
std::uint64_t cell_seed(std::uint64_t root, const std::string& dataset, const std::string& method, const std::string& size,
                        std::size_t trial);

Dataset materialize(const DatasetSpec& spec, std::uint64_t root_seed);

struct CellKey {
    std::size_t dataset = 0, size = 0, trial = 0;
    std::string method;
};

/// Executes one cell and returns its records (an error record on failure).
std::vector<Record> run_cell(const ExperimentConfig& cfg, const std::vector<Dataset>& data, const CellKey& cell);

struct RunOptions {
    std::size_t workers = 0;  // 0: DISTLEARN_WORKERS, else hardware concurrency
    std::ostream* log = nullptr;
};

struct RunSummary {
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
    std::filesystem::path results;
    std::filesystem::path manifest;
};

/// Runs every dataset x size x method x trial cell not yet present in
/// <output_dir>/results.csv, appending as cells finish, then rewrites the
/// file in canonical order. Writes <output_dir>/manifest.json.
RunSummary run(const ExperimentConfig& cfg, const RunOptions& opt = {});

struct PairwiseTest {
    std::string a, b;
    TestResult result;
};

struct ReportOptions {
    std::optional<std::size_t> friedman_top;  // best K methods by mean rank; default all but the worst
    std::optional<std::string> metric;        // default: the task metric
    std::filesystem::path out_dir;            // empty: no files written
};

struct Report {
    std::string metric;
    RankTable table;
    std::vector<double> mean_ranks;
    std::vector<std::string> friedman_methods;
    std::optional<TestResult> friedman;
    std::string notice;
    std::vector<PairwiseTest> wilcoxon;
    std::vector<std::string> gaps;
    std::vector<std::filesystem::path> files;
    std::string text;
};

class IncompleteResults : public std::runtime_error {
public:
    explicit IncompleteResults(std::vector<std::string> gaps);
    const std::vector<std::string>& gaps() const noexcept { return gaps_; }

private:
    std::vector<std::string> gaps_;
};

/// Pseudo-dataset table, mean ranks, Friedman over the chosen subset and all
/// pairwise Wilcoxon tests. Throws IncompleteResults when cells are missing.
Report build_report(const std::vector<Record>& records, const ReportOptions& opt = {});
Report report(const std::filesystem::path& results, const ReportOptions& opt = {});

struct Series {
    std::string name;
    std::vector<double> mean, lower, upper;
};

/// Line chart over categorical x labels with shaded bands.
std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<Series>& series, const std::string& y_label);
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label);

}  // namespace distlearn::bench
