#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trustgame/population.hpp"
#include "trustgame/rng.hpp"

namespace trustgame {

/// <w> sampled every `sample_period_sweeps` sweeps; one sweep is N
/// elementary updates.
struct TimeSeries {
    std::int64_t sample_period_sweeps = 1;
    std::int64_t start_sweep = 0;
    std::vector<double> values;
};

/// In-degree occurrences accumulated over snapshots; counts[k] is the
/// number of (agent, snapshot) pairs with in-degree k.
struct DegreeHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t n_snapshots = 0;

    void add_snapshot(const Population& pop);
    std::int64_t total() const;
};

struct RunResult {
    SimParams params;
    TimeSeries series;
    DegreeHistogram degrees;
    DegreeHistogram last_snapshot;
    double mean_w = 0.0;
    double variance_w = 0.0;
};

/// Uniform w in [0,1) (or all ones) and K distinct non-self targets per agent.
Population init_population(const SimParams& params, Rng& rng);

struct StepOutcome {
    bool noise = false;
    bool rewarder = false;
    bool changed = false;
    agent_t agent = 0;
};

/// One elementary update: noise with probability r, then a uniformly chosen
/// agent updates its rewarder strategy with probability a, its donator
/// strategy otherwise.
StepOutcome step(Population& pop, const SimParams& params, Rng& rng);

using SweepCallback = std::function<void(std::int64_t sweeps_done, std::int64_t sweeps_total)>;

/// Burn-in, then measurement with <w> and in-degree snapshots every
/// record_every_sweeps sweeps. Deterministic in (params, seed).
RunResult run(const SimParams& params, const SweepCallback& progress = {});

struct SweepRow {
    std::int64_t K = 0;
    double a = 0.0;
    std::uint64_t seed = 0;
    double mean_w = 0.0;
    double variance_w = 0.0;
    std::string error;  // empty when the cell succeeded

    bool ok() const { return error.empty(); }
};

/// Runs every (K, a, replicate) cell of the grid on up to `workers` threads.
/// Cell seeds come from cell_seed(base.seed, K index, a index, replicate).
/// Rows are sorted by (K, a, seed) whatever the execution order; a failing
/// cell yields a row with `error` set and does not stop the others.
std::vector<SweepRow> sweep(const SimParams& base, const std::vector<std::int64_t>& K_list,
                            const std::vector<double>& a_list, std::int64_t replicates, unsigned workers,
                            const std::function<void(std::size_t done, std::size_t total)>& progress = {});

}  // namespace trustgame
