#include "distlearn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace distlearn {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_seed(std::uint64_t root, std::string_view key) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = root ^ h;
    splitmix64(state);
    return splitmix64(state);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t state = seed;
    for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) throw std::invalid_argument("Rng::uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo);
    // Rejection on the top multiple of span keeps draws unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span);
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::child(std::uint64_t key) const noexcept {
    std::uint64_t state = seed_ ^ (key * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    splitmix64(state);
    return Rng(splitmix64(state));
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be positive");
    return std::exp(-gamma * squared_distance(x, y));
}

Matrix rbf_kernel_matrix(const Matrix& X, const Matrix& P, double gamma) {
    if (X.cols() != P.cols()) throw std::invalid_argument("rbf_kernel_matrix: dimension mismatch");
    Matrix K(X.rows(), P.rows());
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < P.rows(); ++j) K(i, j) = std::exp(-gamma * squared_distance(X.row(i), P.row(j)));
    return K;
}

bool cholesky(Matrix& a) {
    const std::size_t n = a.rows();
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a(j, j)));
    // Pivots at rounding level of the largest diagonal entry mark a singular matrix.
    const double floor = scale * 1e-13;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > floor) || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return true;
}

std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    return y;
}

std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    std::vector<double> x = forward_substitute(lower, b);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * x[k];
        x[ii] = s / lower(ii, ii);
    }
    return x;
}

Matrix ridge_least_squares_multi(const Matrix& a, const Matrix& rhs, double lambda_reg) {
    const std::size_t n = a.rows(), m = a.cols();
    if (n == 0 || m == 0) throw std::invalid_argument("ridge_least_squares: empty design");
    if (rhs.rows() != n) throw std::invalid_argument("ridge_least_squares: rhs length mismatch");
    if (!(lambda_reg >= 0.0)) throw std::invalid_argument("ridge_least_squares: negative ridge");
    require_finite(a.data(), "ridge_least_squares");
    require_finite(rhs.data(), "ridge_least_squares");

    Matrix gram(m, m);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = a.row(i);
        for (std::size_t p = 0; p < m; ++p) {
            if (r[p] == 0.0) continue;
            for (std::size_t q = 0; q <= p; ++q) gram(p, q) += r[p] * r[q];
        }
    }
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = 0; q < p; ++q) gram(q, p) = gram(p, q);

    Matrix atb(rhs.cols(), m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < rhs.cols(); ++c) {
            const double bi = rhs(i, c);
            if (bi == 0.0) continue;
            for (std::size_t p = 0; p < m; ++p) atb(c, p) += a(i, p) * bi;
        }

    double lambda = lambda_reg;
    Matrix factor;
    for (int attempt = 0;; ++attempt) {
        factor = gram;
        for (std::size_t p = 0; p < m; ++p) factor(p, p) += lambda;
        if (cholesky(factor)) break;
        if (attempt >= 24) throw std::runtime_error("ridge_least_squares: factorization failed");
        lambda = lambda < 1e-8 ? 1e-8 : lambda * 10.0;
    }

    Matrix out(rhs.cols(), m);
    for (std::size_t c = 0; c < rhs.cols(); ++c) {
        auto w = cholesky_solve(factor, atb.row(c));
        std::copy(w.begin(), w.end(), out.row(c).begin());
    }
    return out;
}

std::vector<double> ridge_least_squares(const Matrix& a, std::span<const double> b, double lambda_reg) {
    Matrix rhs(b.size(), 1);
    for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
    Matrix w = ridge_least_squares_multi(a, rhs, lambda_reg);
    return {w.data().begin(), w.data().end()};
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace {

// Series expansion, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q, valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_q: a must be positive");
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double chi2_sf(double x, int df) {
    if (df <= 0) throw std::invalid_argument("chi2_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double beta_log_pdf(double u, double a, double b) {
    return (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) + std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

}  // namespace distlearn
