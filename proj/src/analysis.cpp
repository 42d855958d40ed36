#include "trustgame/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <fftw3.h>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include "trustgame/error.hpp"
#include "trustgame/stability.hpp"

namespace trustgame::analysis {

double variance_of_series(std::span<const double> values) {
    if (values.size() < 2) throw ValidationError("variance needs at least two samples");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0, comp = 0.0;
    for (const double v : values) {
        ss += (v - mean) * (v - mean);
        comp += v - mean;
    }
    return (ss - comp * comp / n) / n;
}

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Spectrum psd(std::span<const double> values, std::int64_t segment_length, double sample_period) {
    if (segment_length < 2 || (segment_length & (segment_length - 1)) != 0)
        throw ValidationError(fmt::format("segment length must be a power of two >= 2 (got {})", segment_length));
    if (static_cast<std::int64_t>(values.size()) < 2 * segment_length)
        throw ValidationError(fmt::format("series of {} samples is shorter than two segments of {}", values.size(),
                                          segment_length));
    if (!(sample_period > 0.0)) throw ValidationError("sample period must be > 0");

    const auto L = static_cast<std::size_t>(segment_length);
    const std::size_t hop = L / 2;
    const std::size_t n_seg = (values.size() - L) / hop + 1;
    const std::size_t n_bins = L / 2 + 1;

    // Periodic Hann window.
    std::vector<double> window(L);
    double window_power = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(L)));
        window_power += window[n] * window[n];
    }

    double* in = fftw_alloc_real(L);
    fftw_complex* out = fftw_alloc_complex(n_bins);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(L), in, out, FFTW_ESTIMATE);
    }

    std::vector<double> acc(n_bins, 0.0);
    for (std::size_t s = 0; s < n_seg; ++s) {
        const double* seg = values.data() + s * hop;
        const double mean = std::accumulate(seg, seg + L, 0.0) / static_cast<double>(L);
        for (std::size_t n = 0; n < L; ++n) in[n] = (seg[n] - mean) * window[n];
        fftw_execute(plan);
        for (std::size_t b = 0; b < n_bins; ++b) acc[b] += out[b][0] * out[b][0] + out[b][1] * out[b][1];
    }

    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);

    const double fs = 1.0 / sample_period;
    Spectrum spec;
    spec.segment_length = segment_length;
    spec.n_segments = static_cast<std::int64_t>(n_seg);
    spec.frequencies.resize(n_bins);
    spec.power.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const bool edge = b == 0 || b == n_bins - 1;
        spec.frequencies[b] = static_cast<double>(b) * fs / static_cast<double>(L);
        spec.power[b] = (edge ? 1.0 : 2.0) * acc[b] / (static_cast<double>(n_seg) * fs * window_power);
    }
    return spec;
}

double loglog_slope(const Spectrum& spec, double f_min, double f_max) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < spec.frequencies.size(); ++b) {
        const double f = spec.frequencies[b];
        if (f <= 0.0 || f < f_min || f > f_max || !(spec.power[b] > 0.0)) continue;
        const double x = std::log(f), y = std::log(spec.power[b]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n == 0) throw ValidationError(fmt::format("no spectral bins in band [{}, {}]", f_min, f_max));
    if (n < 10) throw ValidationError(fmt::format("only {} spectral bins in band [{}, {}]; need 10", n, f_min, f_max));
    const double nd = static_cast<double>(n);
    const double slope = (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
    return -slope;
}

FitBand default_low_band(double series_length_sweeps) { return {4.0 / series_length_sweeps, 0.01}; }

FitBand default_high_band() { return {0.05, 0.5}; }

namespace {

double hurwitz_zeta(double s, double q) {
    gsl_sf_result r;
    const int status = gsl_sf_hzeta_e(s, q, &r);
    if (status != GSL_SUCCESS) throw RuntimeFailure(fmt::format("Hurwitz zeta({}, {}) failed: {}", s, q, gsl_strerror(status)));
    return r.val;
}

}  // namespace

TailFit powerlaw_tail_exponent(std::span<const std::int64_t> counts, std::int64_t k_min) {
    if (k_min < 1) throw ValidationError(fmt::format("k_min must be >= 1 (got {})", k_min));

    TailFit fit;
    fit.k_min = k_min;
    fit.method = "discrete_mle_hurwitz";
    double sum_log = 0.0;
    for (std::size_t k = static_cast<std::size_t>(k_min); k < counts.size(); ++k) {
        if (counts[k] <= 0) continue;
        ++fit.distinct;
        fit.n_tail += counts[k];
        fit.k_max = static_cast<std::int64_t>(k);
        sum_log += static_cast<double>(counts[k]) * std::log(static_cast<double>(k));
    }
    if (fit.distinct < 10)
        throw ValidationError(fmt::format("insufficient tail support: {} distinct k >= {} with nonzero counts, need 10",
                                          fit.distinct, k_min));

    const double n = static_cast<double>(fit.n_tail);
    const double q = static_cast<double>(k_min);
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    auto neg_log_likelihood = [&](double alpha) { return alpha * sum_log + n * std::log(hurwitz_zeta(alpha, q)); };
    const auto [alpha, value] = boost::math::tools::brent_find_minima(neg_log_likelihood, 1.0 + 1e-6, 20.0, 40);
    (void)value;
    gsl_set_error_handler(previous);

    fit.exponent = alpha;
    fit.decades = std::log10(static_cast<double>(fit.k_max) / static_cast<double>(k_min));
    return fit;
}

std::int64_t select_tail_kmin(std::span<const std::int64_t> counts, double mean) {
    const auto k_top = static_cast<std::int64_t>(counts.size()) - 1;
    if (k_top < 1) return -1;
    const auto p0 = stability::poisson_pmf(mean, k_top);
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
    if (total <= 0.0) return -1;

    // ccdf[k] = P(X >= k), accumulated from the top.
    double emp = 0.0, poi = 0.0;
    std::vector<double> emp_ccdf(counts.size()), poi_ccdf(counts.size());
    for (std::int64_t k = k_top; k >= 0; --k) {
        emp += static_cast<double>(counts[static_cast<std::size_t>(k)]) / total;
        poi += p0[static_cast<std::size_t>(k)];
        emp_ccdf[static_cast<std::size_t>(k)] = emp;
        poi_ccdf[static_cast<std::size_t>(k)] = poi;
    }
    // Poisson mass above k_top is not in the sum above; add it back.
    const double beyond = std::max(0.0, 1.0 - std::accumulate(p0.begin(), p0.end(), 0.0));
    for (std::int64_t k = 1; k <= k_top; ++k) {
        const auto s = static_cast<std::size_t>(k);
        if (emp_ccdf[s] > 10.0 * (poi_ccdf[s] + beyond)) return k;
    }
    return -1;
}

ChiSquare poisson_chi_square(std::span<const std::int64_t> counts, double mean) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
    if (total <= 0.0) throw ValidationError("chi-square test on an empty histogram");

    const std::int64_t k_top = std::max<std::int64_t>(static_cast<std::int64_t>(counts.size()) - 1,
                                                       static_cast<std::int64_t>(mean + 20.0 * std::sqrt(mean) + 20.0));
    const auto p0 = stability::poisson_pmf(mean, k_top);
    auto observed_at = [&](std::int64_t k) {
        return k < static_cast<std::int64_t>(counts.size()) ? static_cast<double>(counts[static_cast<std::size_t>(k)])
                                                            : 0.0;
    };

    // Bins [lo, hi]; the first absorbs everything below, the last everything above.
    std::vector<std::pair<double, double>> bins;  // (observed, expected)
    double obs = 0.0, exp = 0.0;
    std::int64_t k = 0;
    for (; k <= k_top; ++k) {
        obs += observed_at(k);
        exp += total * p0[static_cast<std::size_t>(k)];
        if (exp >= 5.0) {
            bins.emplace_back(obs, exp);
            obs = exp = 0.0;
        }
    }
    // Remaining tail (including Poisson mass beyond k_top) merges into the last bin.
    const double covered = std::accumulate(p0.begin(), p0.end(), 0.0);
    exp += total * std::max(0.0, 1.0 - covered);
    if (bins.empty()) throw ValidationError("chi-square test: too few observations to form bins");
    bins.back().first += obs;
    bins.back().second += exp;

    ChiSquare out;
    for (const auto& [o, e] : bins) out.statistic += (o - e) * (o - e) / e;
    out.dof = static_cast<std::int64_t>(bins.size()) - 1;
    if (out.dof < 1) throw ValidationError("chi-square test: fewer than two bins");
    out.p_value = boost::math::gamma_q(0.5 * static_cast<double>(out.dof), 0.5 * out.statistic);
    return out;
}

}  // namespace trustgame::analysis
