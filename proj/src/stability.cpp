#include "trustgame/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "trustgame/error.hpp"

namespace trustgame::stability {

std::vector<double> poisson_pmf(double mean, std::int64_t k_max) {
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1);
    for (std::int64_t k = 0; k <= k_max; ++k) {
        const double kd = static_cast<double>(k);
        p[static_cast<std::size_t>(k)] =
            mean > 0.0 ? std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0)) : (k == 0 ? 1.0 : 0.0);
    }
    return p;
}

std::int64_t min_k_max(std::int64_t K) {
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(K) + 10.0 * std::sqrt(static_cast<double>(K))));
}

std::int64_t default_k_max(std::int64_t K) {
    return static_cast<std::int64_t>(
        std::ceil(static_cast<double>(K) + 12.0 * std::sqrt(static_cast<double>(K)) + 20.0));
}

LinearOperator build_linearized_matrix(std::int64_t K, double a, std::int64_t k_max) {
    if (K < 1) throw ValidationError(fmt::format("K must be >= 1 (got {})", K));
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError(fmt::format("a must lie in [0,1] (got {})", a));
    if (k_max < min_k_max(K))
        throw ValidationError(
            fmt::format("k_max={} leaves a non-negligible Poisson({}) tail; need k_max >= {}", k_max, K, min_k_max(K)));

    const auto n = static_cast<Eigen::Index>(k_max + 1);
    const auto p0 = poisson_pmf(static_cast<double>(K), k_max);
    const double Kd = static_cast<double>(K);

    LinearOperator op{K, a, k_max, Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index k = 1; k < n; ++k)
        for (Eigen::Index kp = 1; kp < n; ++kp) op.M(k, kp) = a * p0[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < n; ++k) {
        op.M(k, k) -= (1.0 - a) * static_cast<double>(k) / Kd;
        if (k + 1 < n) op.M(k, k + 1) += (1.0 - a) * static_cast<double>(k + 1) / Kd;
    }
    return op;
}

double leading_eigenvalue(const LinearOperator& op) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(op.M, false);
    if (solver.info() != Eigen::Success) throw RuntimeFailure("eigen-decomposition did not converge");
    return solver.eigenvalues().real().maxCoeff();
}

double leading_eigenvalue_power(const LinearOperator& op, double tol, std::int64_t max_iter) {
    const double shift = op.M.diagonal().cwiseAbs().maxCoeff();
    const Eigen::MatrixXd B = op.M + shift * Eigen::MatrixXd::Identity(op.M.rows(), op.M.cols());

    Eigen::VectorXd x = Eigen::VectorXd::Ones(op.M.rows()).normalized();
    double estimate = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = B * x;
        const double norm = y.norm();
        if (norm == 0.0) return -shift;
        const double next = x.dot(y);  // Rayleigh quotient, x has unit norm
        x = y / norm;
        if (std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next))) return next - shift;
        estimate = next;
    }
    throw RuntimeFailure(fmt::format("power iteration did not converge after {} iterations (K={}, a={})", max_iter,
                                     op.K, op.a));
}

double stability_indicator(const LinearOperator& op) {
    // Column 0 of M is zero, so M is block upper-triangular with the 1x1
    // block {0} for k = 0; the rest of the spectrum is that of the k >= 1
    // principal block.
    const Eigen::Index n = op.M.rows() - 1;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(op.M.bottomRightCorner(n, n), false);
    if (solver.info() != Eigen::Success) throw RuntimeFailure("eigen-decomposition did not converge");
    return solver.eigenvalues().real().maxCoeff();
}

double find_critical_a_at(std::int64_t K, double tol, std::int64_t k_max) {
    if (!(tol > 0.0)) throw ValidationError(fmt::format("tol must be > 0 (got {})", tol));

    std::map<double, double> seen;  // a -> indicator, checked for monotonicity
    auto indicator = [&](double a) {
        const double v = stability_indicator(build_linearized_matrix(K, a, k_max));
        auto [it, inserted] = seen.emplace(a, v);
        if (it != seen.begin() && std::prev(it)->second > v + 1e-12)
            throw RuntimeFailure(fmt::format("stability indicator not monotone in a near a={} (K={})", a, K));
        if (std::next(it) != seen.end() && std::next(it)->second < v - 1e-12)
            throw RuntimeFailure(fmt::format("stability indicator not monotone in a near a={} (K={})", a, K));
        return v;
    };

    double lo = 0.0, hi = 1.0;
    if (!(indicator(lo) < 0.0 && indicator(hi) > 0.0))
        throw RuntimeFailure(fmt::format("no sign change of the stability indicator in (0,1) for K={}", K));
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (indicator(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

CriticalPoint find_critical_a(std::int64_t K, double tol) {
    std::int64_t k_max = default_k_max(K);
    double a_c = find_critical_a_at(K, tol, k_max);
    for (int doubling = 0; doubling < 8; ++doubling) {
        const double refined = find_critical_a_at(K, tol, 2 * k_max);
        k_max *= 2;
        const bool settled = std::abs(refined - a_c) < tol;
        a_c = refined;
        if (settled) return {K, a_c, k_max, tol};
    }
    throw RuntimeFailure(fmt::format("critical a for K={} did not settle under truncation doubling", K));
}

}  // namespace trustgame::stability
