#include "trustgame/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "trustgame/error.hpp"

namespace trustgame {

namespace {

constexpr std::int64_t kRefreshEverySweeps = 1000000;

}  // namespace

void DegreeHistogram::add_snapshot(const Population& pop) {
    for (const auto k : pop.in_degrees()) {
        if (static_cast<std::size_t>(k) >= counts.size()) counts.resize(static_cast<std::size_t>(k) + 1, 0);
        ++counts[static_cast<std::size_t>(k)];
    }
    ++n_snapshots;
}

std::int64_t DegreeHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

Population init_population(const SimParams& params, Rng& rng) {
    params.validate();
    const auto n = static_cast<std::uint64_t>(params.N);
    const auto K = static_cast<std::size_t>(params.K);
    std::vector<double> w(n);
    for (auto& v : w) v = params.init == InitialCondition::all_ones ? 1.0 : rng.uniform();

    std::vector<agent_t> edges(n * K);
    for (std::uint64_t i = 0; i < n; ++i) {
        agent_t* mine = edges.data() + i * K;
        for (std::size_t s = 0; s < K; ++s) {
            agent_t t;
            do {
                t = static_cast<agent_t>(rng.below(n - 1));
                if (t >= i) ++t;
            } while (std::find(mine, mine + s, t) != mine + s);
            mine[s] = t;
        }
    }
    return Population(params.K, std::move(w), std::move(edges));
}

StepOutcome step(Population& pop, const SimParams& params, Rng& rng) {
    StepOutcome out;
    if (params.r > 0.0 && rng.bernoulli(params.r)) {
        apply_noise(pop, rng);
        out.noise = true;
    }
    out.agent = static_cast<agent_t>(rng.below(static_cast<std::uint64_t>(pop.size())));
    out.rewarder = rng.bernoulli(params.a);
    out.changed = out.rewarder ? rewarder_update(pop, rng, out.agent) : donator_update(pop, rng, out.agent);
    return out;
}

RunResult run(const SimParams& params, const SweepCallback& progress) {
    params.validate();
    Rng rng(params.seed);
    Population pop = init_population(params, rng);

    RunResult result;
    result.params = params;
    result.series.sample_period_sweeps = params.record_every_sweeps;
    result.series.start_sweep = params.burn_in_sweeps;
    result.series.values.reserve(static_cast<std::size_t>(params.measure_sweeps / params.record_every_sweeps));

    const std::int64_t total = params.burn_in_sweeps + params.measure_sweeps;
    for (std::int64_t sweep = 1; sweep <= total; ++sweep) {
        for (std::int64_t s = 0; s < params.N; ++s) step(pop, params, rng);
        if (sweep % kRefreshEverySweeps == 0) pop.refresh_w_sum();

        const std::int64_t measured = sweep - params.burn_in_sweeps;
        if (measured > 0 && measured % params.record_every_sweeps == 0) {
            result.series.values.push_back(std::clamp(pop.mean_w(), 0.0, 1.0));
            result.degrees.add_snapshot(pop);
        }
        if (progress) progress(sweep, total);
    }
    if (result.degrees.n_snapshots > 0) {
        result.last_snapshot.add_snapshot(pop);
    }

    const auto& v = result.series.values;
    if (!v.empty()) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (const double x : v) ss += (x - mean) * (x - mean);
        result.mean_w = mean;
        result.variance_w = ss / static_cast<double>(v.size());
    }
    return result;
}

std::vector<SweepRow> sweep(const SimParams& base, const std::vector<std::int64_t>& K_list,
                            const std::vector<double>& a_list, std::int64_t replicates, unsigned workers,
                            const std::function<void(std::size_t, std::size_t)>& progress) {
    if (K_list.empty() || a_list.empty() || replicates < 1)
        throw ValidationError("sweep grid must be nonempty (K list, a list, replicates >= 1)");

    struct Cell {
        std::size_t ki, ai;
        std::int64_t rep;
    };
    std::vector<Cell> cells;
    for (std::size_t ki = 0; ki < K_list.size(); ++ki)
        for (std::size_t ai = 0; ai < a_list.size(); ++ai)
            for (std::int64_t rep = 0; rep < replicates; ++rep) cells.push_back({ki, ai, rep});

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            const auto& cell = cells[c];
            SweepRow& row = rows[c];
            row.K = K_list[cell.ki];
            row.a = a_list[cell.ai];
            row.seed = cell_seed(base.seed, cell.ki, cell.ai, static_cast<std::uint64_t>(cell.rep));
            try {
                SimParams p = base;
                p.K = row.K;
                p.a = row.a;
                p.seed = row.seed;
                const RunResult res = run(p);
                row.mean_w = res.mean_w;
                row.variance_w = res.variance_w;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            const std::size_t finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, cells.size());
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
        return std::tie(x.K, x.a, x.seed) < std::tie(y.K, y.a, y.seed);
    });
    return rows;
}

}  // namespace trustgame
