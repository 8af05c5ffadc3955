#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distlearn/data.hpp"
#include "distlearn/matrix.hpp"

namespace distlearn {

/// Unweighted mean of per-class F1; a class with P + R = 0 scores 0.
double f1_macro(const Labels& y_true, const Labels& y_pred, int n_classes);
double accuracy(const Labels& y_true, const Labels& y_pred);

enum class Orientation { higher_better, lower_better };

/// Pseudo-dataset table: one row per (dataset, model size), one column per
/// method, each cell the trial mean of the metric.
struct RankTable {
    std::vector<std::string> rows;
    std::vector<std::string> methods;
    Matrix values;  // rows x methods
    Orientation orientation = Orientation::higher_better;

    RankTable select_methods(std::span<const std::size_t> cols) const;
};

/// Ranks within one row; best gets 1, ties share the average of their ranks.
std::vector<double> rank_row(std::span<const double> row, Orientation orientation);
std::vector<double> mean_ranks(const RankTable& t);

enum class PMethod { exact, asymptotic };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    PMethod method = PMethod::exact;
    bool tie_corrected = false;
};

struct FriedmanOptions {
    std::size_t exact_max_rows = 8;
    std::size_t exact_max_methods = 4;
};

/// Friedman chi-square over the chosen columns (all when empty). Ties get
/// average ranks and the statistic is divided by the usual tie correction.
/// Small tables use the exact permutation distribution of within-row ranks.
TestResult friedman_test(const RankTable& t, std::span<const std::size_t> methods = {}, const FriedmanOptions& opt = {});

enum class ZeroMethod { drop, pratt };

struct WilcoxonOptions {
    std::size_t exact_max_n = 25;
    ZeroMethod zeros = ZeroMethod::drop;
};

/// Two-sided paired signed-rank test on a - b. The statistic is
/// min(W+, W-); exact p counts sign patterns with min(W+, W-) at most the
/// observed value.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, const WilcoxonOptions& opt = {});

/// Two-sided 95% Student-t critical value.
double t_critical_975(std::size_t df);

}  // namespace distlearn
