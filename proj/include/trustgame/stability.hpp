#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace trustgame::stability {

/// Linearized evolution of an invading strategy around the state where
/// every agent has w = 1: d rho/dt = M rho, rho indexed by in-degree
/// k = 0..k_max.
///
///   M[k][k'] = a P0(k) [k>0][k'>0]
///            + (1-a) ( (k+1)/K [k'=k+1] - k/K [k'=k] )
///
/// with P0 the Poisson(K) in-degree law of the resident population. The
/// first part is residents copying invaders that still have donators; the
/// second is invaders losing donators to better rewarders.
struct LinearOperator {
    std::int64_t K = 1;
    double a = 0.0;
    std::int64_t k_max = 0;
    Eigen::MatrixXd M;
};

/// Poisson(mean) probabilities for k = 0..k_max.
std::vector<double> poisson_pmf(double mean, std::int64_t k_max);

/// Smallest admissible truncation: K + 10 sqrt(K).
std::int64_t min_k_max(std::int64_t K);

/// Default starting truncation: K + 12 sqrt(K) + 20.
std::int64_t default_k_max(std::int64_t K);

/// Throws ValidationError when K < 1, a outside [0,1] or k_max below
/// min_k_max(K).
LinearOperator build_linearized_matrix(std::int64_t K, double a, std::int64_t k_max);

/// max Re(lambda) over the whole spectrum (dense eigen-decomposition).
double leading_eigenvalue(const LinearOperator& op);

/// Same quantity by power iteration on M + s I, with s = max_k |M[k][k]|.
/// M is Metzler, so the shifted matrix is nonnegative and its dominant
/// eigenvalue is the (real) leading eigenvalue of M plus s. Throws
/// RuntimeFailure with the iteration count if the estimate has not settled
/// to `tol` after `max_iter` iterations.
double leading_eigenvalue_power(const LinearOperator& op, double tol = 1e-14, std::int64_t max_iter = 2000000);

/// Leading Re(lambda) with the structural k = 0 mode removed. Column 0 of M
/// is zero, so lambda = 0 with eigenvector e_0 is always present: invaders
/// without donators neither spread nor revert in the linearization. The
/// remaining spectrum is that of the k >= 1 principal block, which is what
/// this returns.
double stability_indicator(const LinearOperator& op);

struct CriticalPoint {
    std::int64_t K = 1;
    double a_c = 0.0;
    std::int64_t k_max = 0;
    double tol = 1e-6;
};

/// Bisection on a in [0,1] for the zero of stability_indicator. The bracket
/// is checked to keep the indicator monotone in a; a violation or a missing
/// sign change throws RuntimeFailure. Starting from default_k_max(K) the
/// truncation is doubled until a_c moves by less than tol.
CriticalPoint find_critical_a(std::int64_t K, double tol = 1e-6);

/// Bisection at a fixed truncation.
double find_critical_a_at(std::int64_t K, double tol, std::int64_t k_max);

}  // namespace trustgame::stability
