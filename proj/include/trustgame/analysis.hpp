#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trustgame::analysis {

/// Population variance (divide by n). Requires at least two samples.
double variance_of_series(std::span<const double> values);

/// One-sided power spectral density.
struct Spectrum {
    std::vector<double> frequencies;  // cycles per sweep, starting at 0
    std::vector<double> power;
    std::int64_t segment_length = 0;
    std::int64_t n_segments = 0;
};

/// Welch estimate: segments of `segment_length` samples with 50% overlap,
/// each with its own mean removed and a Hann window applied. Scaled so that
/// sum(power) * df reproduces the series variance. `sample_period` is the
/// spacing of the samples in sweeps.
Spectrum psd(std::span<const double> values, std::int64_t segment_length, double sample_period = 1.0);

/// alpha = -slope of the least-squares line through (log f, log power) over
/// the bins with f_min <= f <= f_max. At least 10 bins are required.
double loglog_slope(const Spectrum& spec, double f_min, double f_max);

struct FitBand {
    double f_min;
    double f_max;
};

/// Low band [4/L, 0.01] cycles/sweep, L the series length in sweeps.
FitBand default_low_band(double series_length_sweeps);
/// High band [0.05, 0.5] cycles/sweep.
FitBand default_high_band();

struct TailFit {
    double exponent = 0.0;
    std::int64_t k_min = 0;
    std::int64_t k_max = 0;        // largest k with nonzero count
    std::int64_t n_tail = 0;       // observations with k >= k_min
    std::int64_t distinct = 0;     // distinct k >= k_min with nonzero count
    double decades = 0.0;          // log10(k_max / k_min)
    std::string method;
};

/// Discrete power-law maximum-likelihood exponent for k >= k_min, from a
/// histogram counts[k]. The likelihood uses the Hurwitz zeta normalization
/// and is maximized numerically.
TailFit powerlaw_tail_exponent(std::span<const std::int64_t> counts, std::int64_t k_min);

/// Smallest k >= 1 whose empirical CCDF exceeds 10 times the Poisson(mean)
/// CCDF. Returns -1 when no such k exists.
std::int64_t select_tail_kmin(std::span<const std::int64_t> counts, double mean);

struct ChiSquare {
    double statistic = 0.0;
    std::int64_t dof = 0;
    double p_value = 0.0;
};

/// Pearson goodness of fit of counts[k] against Poisson(mean). Outer bins
/// are pooled until every expected count is at least 5.
ChiSquare poisson_chi_square(std::span<const std::int64_t> counts, double mean);

}  // namespace trustgame::analysis
