#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "distlearn/matrix.hpp"
#include "distlearn/numerics.hpp"

namespace distlearn {

using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;

struct Dataset {
    std::string name;
    Matrix X;
    Labels y;
    int n_classes = 0;
    std::vector<std::string> feature_names;  // empty when the source had no header
    std::vector<std::string> class_names;    // original label text, indexed by class id

    std::size_t size() const noexcept { return X.rows(); }
    std::size_t dims() const noexcept { return X.cols(); }
    Dataset subset(std::span<const std::size_t> idx) const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Reads `<label> <idx>:<value> ...` with 1-based ascending indices. Absent
/// entries are zero; the width is the largest index seen unless `n_features`
/// is given. Labels are remapped to 0..C-1 by sorted original value.
Dataset load_libsvm(const std::filesystem::path& path, std::size_t n_features = 0);
void save_libsvm(const Dataset& ds, const std::filesystem::path& path);

/// Column selector for CSV labels: an index (negative counts from the end) or a header name.
using LabelColumn = std::variant<int, std::string>;

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column = -1);
/// Writes features then the label; floats with 17 significant digits. A header
/// row is written only when the dataset carries feature names.
void save_csv(const Dataset& ds, const std::filesystem::path& path);

struct Split {
    IndexList train, val, test;
    bool stratified = false;  // false when stratification was requested but impossible
};

/// Random partition with largest-remainder part sizes. Fractions must sum to 1.
Split split(const Dataset& ds, std::array<double, 3> fractions, Rng& rng, bool stratified);
/// Split with train = val = test = every index.
Split identity_split(const Dataset& ds);

struct Standardizer {
    std::vector<double> mean, scale;
    Matrix apply(const Matrix& X) const;
};

/// Centers and scales every feature with statistics from `stats_from` rows.
/// Zero-variance features keep scale 1.
Standardizer fit_standardizer(const Matrix& X, std::span<const std::size_t> stats_from);
Dataset standardize(const Dataset& ds, std::span<const std::size_t> stats_from, Standardizer* out = nullptr);

/// Deterministic class-stratified draw of n instances without replacement.
IndexList stratified_subsample(const Dataset& ds, std::size_t n, Rng& rng);

/// Isotropic Gaussian mixture with balanced components whose centers are at
/// least 6 * spread apart. Labels are the component ids.
Dataset make_blobs(std::size_t n, int k, std::size_t dim, double spread, Rng& rng);

/// Named synthetic generators used by the benchmark configs. Parameters not
/// present in `params` take generator defaults.
///   blobs        n, k, dim, spread
///   interleaved  n, k, dim, spread   elongated diagonal clusters (hard for axis-aligned trees)
///   rings        n, classes, dim, noise
///   checker      n, cells, dim, noise
///   imbalanced   n, classes, dim, overlap
Dataset make_synthetic(const std::string& kind, const std::map<std::string, double>& params, Rng& rng);

}  // namespace distlearn
