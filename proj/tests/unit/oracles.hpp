#pragma once

// Reference computations written independently of the library, used as
// test oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

// Poisson(mean) pmf by the recurrence p_k = p_{k-1} mean / k.
inline std::vector<double> poisson(double mean, int k_max) {
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1);
    p[0] = std::exp(-mean);
    for (int k = 1; k <= k_max; ++k) p[k] = p[k - 1] * mean / k;
    return p;
}

inline std::vector<double> binomial(int n, double q, int k_max) {
    std::vector<double> p(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (int k = 0; k <= std::min(n, k_max); ++k)
        p[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(q) +
                        (n - k) * std::log1p(-q));
    return p;
}

// Critical rate from the characteristic equation of the linearized
// invader dynamics: 1/a_c = 1 + K sum_{k>=1} P0(k) H_k.
inline double critical_a_closed_form(int K) {
    const auto p = poisson(K, 400);
    double h = 0.0, s = 0.0;
    for (int k = 1; k <= 400; ++k) {
        h += 1.0 / k;
        s += p[k] * h;
    }
    return 1.0 / (1.0 + K * s);
}

// Kolmogorov-Smirnov p-value for a sample against U[0,1), using the
// asymptotic distribution with the Stephens small-sample correction.
inline double ks_uniform_p(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(q, 0.0, 1.0);
}

struct ChiSquare {
    double statistic;
    int dof;
    double p;
};

// Pearson chi-square of observed counts against pmf `expected_p`, with
// adjacent bins pooled until each expected count is at least 5. The
// remaining tail mass is added to the last bin.
inline ChiSquare chi_square(const std::vector<std::int64_t>& counts, const std::vector<double>& pmf) {
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    const std::size_t len = std::max(counts.size(), pmf.size());
    std::vector<double> obs, expct;
    double o = 0.0, e = 0.0, used = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        o += k < counts.size() ? static_cast<double>(counts[k]) : 0.0;
        const double pk = k < pmf.size() ? pmf[k] : 0.0;
        e += n * pk;
        used += pk;
        if (e >= 5.0) {
            obs.push_back(o);
            expct.push_back(e);
            o = e = 0.0;
        }
    }
    e += n * std::max(0.0, 1.0 - used);
    if (!obs.empty()) {
        obs.back() += o;
        expct.back() += e;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
    const int dof = static_cast<int>(obs.size()) - 1;
    return {stat, dof, boost::math::gamma_q(dof / 2.0, stat / 2.0)};
}

}  // namespace oracle
