#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "distlearn/matrix.hpp"

namespace distlearn {

/// xoshiro256** seeded through splitmix64.
///
/// Every distribution used by the library is derived here from raw 64-bit
/// draws, so streams are identical across compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi). Requires lo < hi.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n))); }
    double normal() noexcept;

    /// Independent child stream, keyed so that the same key always yields
    /// the same child regardless of how many draws the parent has made.
    Rng child(std::uint64_t key) const noexcept;

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // UniformRandomBitGenerator surface.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() noexcept { return next_u64(); }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;
/// Stable 64-bit mix of a seed and a string key (FNV-1a then splitmix).
std::uint64_t hash_seed(std::uint64_t root, std::string_view key) noexcept;

double squared_distance(std::span<const double> x, std::span<const double> y);
/// exp(-gamma * ||x - y||^2). Throws std::invalid_argument on dimension mismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);
/// N x M matrix of rbf_kernel(X_i, P_j).
Matrix rbf_kernel_matrix(const Matrix& X, const Matrix& P, double gamma);

/// In-place lower Cholesky factor of a symmetric matrix. Returns false when
/// the matrix is not numerically positive definite.
bool cholesky(Matrix& a);
/// Solves L L^T x = b given the factor from cholesky().
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);
/// Solves L y = b.
std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b);

/// argmin_w ||A w - b||^2 + lambda ||w||^2 through the normal equations.
/// When the system is not positive definite the ridge is raised (starting at
/// 1e-8) until the factorization succeeds.
std::vector<double> ridge_least_squares(const Matrix& a, std::span<const double> b, double lambda_reg);

/// Several right-hand sides sharing one factorization. Column c of `rhs`
/// yields row c of the result.
Matrix ridge_least_squares_multi(const Matrix& a, const Matrix& rhs, double lambda_reg);

/// Upper tail of the standard normal, 1 - Phi(z).
double normal_sf(double z);
/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);
/// Chi-square survival function with `df` degrees of freedom.
double chi2_sf(double x, int df);
/// log of the Beta(a, b) density at u in (0, 1).
double beta_log_pdf(double u, double a, double b);

}  // namespace distlearn
