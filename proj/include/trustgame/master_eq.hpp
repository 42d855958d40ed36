#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace trustgame::master_eq {

/// P(k, w) on in-degrees k = 0..k_max and n_w equally spaced values
/// w_i = i / (n_w - 1), i = 0..n_w-1 (both endpoints included).
/// Stored row-major: P[k * n_w + i].
struct DistributionGrid {
    std::int64_t K = 1;  // nominal mean in-degree <k>
    std::int64_t k_max = 0;
    std::int64_t n_w = 0;
    std::vector<double> P;

    DistributionGrid() = default;
    DistributionGrid(std::int64_t K, std::int64_t k_max, std::int64_t n_w);

    double& at(std::int64_t k, std::int64_t i) { return P[static_cast<std::size_t>(k * n_w + i)]; }
    double at(std::int64_t k, std::int64_t i) const { return P[static_cast<std::size_t>(k * n_w + i)]; }
    double w(std::int64_t i) const { return static_cast<double>(i) / static_cast<double>(n_w - 1); }
    std::vector<double> w_values() const;

    /// Throws ValidationError unless mass is 1 within 1e-8, entries are
    /// nonnegative and the mean in-degree is K within 1e-6.
    void validate() const;
};

/// K + 12 sqrt(K) + 40.
std::int64_t default_k_max(std::int64_t K);

/// Poisson(K) in k, equal weight on every w column.
DistributionGrid uniform_poisson(std::int64_t K, std::int64_t k_max, std::int64_t n_w);

/// Poisson(K) in k, all mass on column `column`.
DistributionGrid single_column_poisson(std::int64_t K, std::int64_t k_max, std::int64_t n_w, std::int64_t column);

/// Resident column holding 1 - eps, invader column holding eps, both with
/// a Poisson(K) in-degree profile.
DistributionGrid perturbed_resident(std::int64_t K, std::int64_t k_max, std::int64_t n_w, std::int64_t resident,
                                    std::int64_t invader, double eps);

double total_mass(const DistributionGrid& g);
double mean_degree(const DistributionGrid& g);
double mean_w(const DistributionGrid& g);

/// Rewarder replication term. With payoffs measured in integer units
/// k (n_w - 1 - i), the copy condition k''(1-w) >= k(1-w') is evaluated
/// exactly, including the w = 1 column.
std::vector<double> gamma_term(const DistributionGrid& g);

/// Donator comparison term. Candidate rewarders at k_max are excluded from
/// both sides of a move so truncation conserves mass and edges.
std::vector<double> xi_term(const DistributionGrid& g);

/// a gamma + (1-a) xi, plus the optional mutation term
/// mutation (column mean - P) at fixed k.
std::vector<double> rhs(const DistributionGrid& g, double a, double mutation = 0.0);

struct IntegrateOptions {
    double a = 0.5;
    double dt = 0.1;
    double T = 100.0;
    double sample_every = 1.0;
    std::vector<double> snapshot_times;
    double mutation = 0.0;
    /// Per-step clipped mass above which dt is halved; abort after
    /// max_halvings.
    double clip_limit = 1e-6;
    int max_halvings = 12;
    /// Split dt into substeps so that dt_sub * max_rate stays inside the
    /// RK4 real-axis stability interval.
    bool stability_substeps = true;
};

struct Snapshot {
    double t = 0.0;
    DistributionGrid grid;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<double> mean_w;
    std::vector<Snapshot> snapshots;
    DistributionGrid final_grid;
    std::int64_t steps = 0;          // RK4 steps taken (substeps counted)
    double dt_used = 0.0;            // final internal step
    double max_clipped = 0.0;        // largest per-step clipped mass
    double total_clipped = 0.0;
    double mass_drift = 0.0;         // accumulated raw drift before clip/renormalize
    double degree_drift = 0.0;
    double max_step_mass_drift = 0.0;
    double max_step_degree_drift = 0.0;
};

/// Largest decay rate the right-hand side can produce:
/// (1-a)(k_max/K + 1) + a + mutation.
double max_rate(const DistributionGrid& g, double a, double mutation);

/// Explicit RK4 with clip-and-renormalize after every step.
Trajectory integrate(const DistributionGrid& start, const IntegrateOptions& opt);

/// Writes `k,w,P` rows.
void write_grid_csv(const std::filesystem::path& path, const DistributionGrid& g);

}  // namespace trustgame::master_eq
