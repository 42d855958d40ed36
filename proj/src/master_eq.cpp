#include "trustgame/master_eq.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "trustgame/csv.hpp"
#include "trustgame/error.hpp"
#include "trustgame/stability.hpp"

namespace trustgame::master_eq {

DistributionGrid::DistributionGrid(std::int64_t K_, std::int64_t k_max_, std::int64_t n_w_)
    : K(K_), k_max(k_max_), n_w(n_w_) {
    if (K < 1) throw ValidationError(fmt::format("K must be >= 1 (got {})", K));
    if (n_w < 2) throw ValidationError(fmt::format("N_w must be >= 2 (got {})", n_w));
    if (k_max < K) throw ValidationError(fmt::format("k_max must be >= K (got {})", k_max));
    P.assign(static_cast<std::size_t>((k_max + 1) * n_w), 0.0);
}

std::vector<double> DistributionGrid::w_values() const {
    std::vector<double> out(static_cast<std::size_t>(n_w));
    for (std::int64_t i = 0; i < n_w; ++i) out[static_cast<std::size_t>(i)] = w(i);
    return out;
}

void DistributionGrid::validate() const {
    if (P.size() != static_cast<std::size_t>((k_max + 1) * n_w)) throw ValidationError("grid: storage size mismatch");
    for (const double v : P)
        if (!(v >= 0.0)) throw ValidationError("grid: negative or non-finite entry");
    if (std::abs(total_mass(*this) - 1.0) > 1e-8) throw ValidationError("grid: total mass differs from 1");
    if (std::abs(mean_degree(*this) - static_cast<double>(K)) > 1e-6)
        throw ValidationError("grid: mean in-degree differs from K");
}

std::int64_t default_k_max(std::int64_t K) {
    return static_cast<std::int64_t>(
        std::ceil(static_cast<double>(K) + 12.0 * std::sqrt(static_cast<double>(K)) + 40.0));
}

namespace {

void fill_column(DistributionGrid& g, std::int64_t column, double weight) {
    const auto p0 = stability::poisson_pmf(static_cast<double>(g.K), g.k_max);
    double norm = 0.0;
    for (const double p : p0) norm += p;
    for (std::int64_t k = 0; k <= g.k_max; ++k) g.at(k, column) += weight * p0[static_cast<std::size_t>(k)] / norm;
}

void check_column(const DistributionGrid& g, std::int64_t column) {
    if (column < 0 || column >= g.n_w)
        throw ValidationError(fmt::format("w column {} outside 0..{}", column, g.n_w - 1));
}

}  // namespace

DistributionGrid uniform_poisson(std::int64_t K, std::int64_t k_max, std::int64_t n_w) {
    DistributionGrid g(K, k_max, n_w);
    for (std::int64_t i = 0; i < n_w; ++i) fill_column(g, i, 1.0 / static_cast<double>(n_w));
    return g;
}

DistributionGrid single_column_poisson(std::int64_t K, std::int64_t k_max, std::int64_t n_w, std::int64_t column) {
    DistributionGrid g(K, k_max, n_w);
    check_column(g, column);
    fill_column(g, column, 1.0);
    return g;
}

DistributionGrid perturbed_resident(std::int64_t K, std::int64_t k_max, std::int64_t n_w, std::int64_t resident,
                                    std::int64_t invader, double eps) {
    DistributionGrid g(K, k_max, n_w);
    check_column(g, resident);
    check_column(g, invader);
    if (!(eps >= 0.0 && eps <= 1.0)) throw ValidationError("perturbation eps must lie in [0,1]");
    fill_column(g, resident, 1.0 - eps);
    fill_column(g, invader, eps);
    return g;
}

double total_mass(const DistributionGrid& g) {
    double s = 0.0;
    for (const double v : g.P) s += v;
    return s;
}

double mean_degree(const DistributionGrid& g) {
    double s = 0.0;
    for (std::int64_t k = 0; k <= g.k_max; ++k) {
        double row = 0.0;
        for (std::int64_t i = 0; i < g.n_w; ++i) row += g.at(k, i);
        s += static_cast<double>(k) * row;
    }
    return s;
}

double mean_w(const DistributionGrid& g) {
    double s = 0.0;
    for (std::int64_t i = 0; i < g.n_w; ++i) {
        double column = 0.0;
        for (std::int64_t k = 0; k <= g.k_max; ++k) column += g.at(k, i);
        s += g.w(i) * column;
    }
    return s;
}

std::vector<double> gamma_term(const DistributionGrid& g) {
    const std::int64_t nk = g.k_max + 1;
    const std::int64_t nw = g.n_w;
    const std::int64_t top = nw - 1;

    // tail[i][k] = sum_{k'' >= k} P(k'', i), with tail[i][nk] = 0
    std::vector<double> tail(static_cast<std::size_t>(nw * (nk + 1)), 0.0);
    auto tail_at = [&](std::int64_t i, std::int64_t k) -> double& {
        return tail[static_cast<std::size_t>(i * (nk + 1) + k)];
    };
    for (std::int64_t i = 0; i < nw; ++i)
        for (std::int64_t k = nk - 1; k >= 0; --k) tail_at(i, k) = tail_at(i, k + 1) + g.at(k, i);

    // Mass of column `to` among agents whose payoff is >= that of an agent
    // at (k, from): k''(top - to) >= k(top - from).
    auto transfer = [&](std::int64_t k, std::int64_t from, std::int64_t to) -> double {
        const std::int64_t gap_to = top - to;
        const std::int64_t need = k * (top - from);
        if (gap_to == 0) return need == 0 ? tail_at(to, 0) : 0.0;
        const std::int64_t threshold = (need + gap_to - 1) / gap_to;
        return threshold < nk ? tail_at(to, threshold) : 0.0;
    };

    std::vector<double> out(g.P.size(), 0.0);
    for (std::int64_t k = 0; k < nk; ++k) {
        for (std::int64_t i = 0; i < nw; ++i) {
            double gain = 0.0, loss = 0.0;
            for (std::int64_t j = 0; j < nw; ++j) {
                if (j == i) continue;
                gain += g.at(k, j) * transfer(k, j, i);
                loss += transfer(k, i, j);
            }
            out[static_cast<std::size_t>(k * nw + i)] = gain - g.at(k, i) * loss;
        }
    }
    return out;
}

std::vector<double> xi_term(const DistributionGrid& g) {
    const std::int64_t nk = g.k_max + 1;
    const std::int64_t nw = g.n_w;
    const double K = static_cast<double>(g.K);

    // above[i]: candidate mass with w' >= w_i that can still accept a donator (k' < k_max)
    // weighted_below[i]: sum over w' <= w_i of P(k', w') k' / K
    std::vector<double> above(static_cast<std::size_t>(nw), 0.0), weighted_below(static_cast<std::size_t>(nw), 0.0);
    std::vector<double> col_open(static_cast<std::size_t>(nw), 0.0), col_edges(static_cast<std::size_t>(nw), 0.0);
    for (std::int64_t i = 0; i < nw; ++i) {
        for (std::int64_t k = 0; k < nk; ++k) {
            if (k < g.k_max) col_open[static_cast<std::size_t>(i)] += g.at(k, i);
            col_edges[static_cast<std::size_t>(i)] += static_cast<double>(k) / K * g.at(k, i);
        }
    }
    for (std::int64_t i = nw - 1; i >= 0; --i)
        above[static_cast<std::size_t>(i)] =
            col_open[static_cast<std::size_t>(i)] + (i + 1 < nw ? above[static_cast<std::size_t>(i + 1)] : 0.0);
    for (std::int64_t i = 0; i < nw; ++i)
        weighted_below[static_cast<std::size_t>(i)] =
            col_edges[static_cast<std::size_t>(i)] + (i > 0 ? weighted_below[static_cast<std::size_t>(i - 1)] : 0.0);

    auto P = [&](std::int64_t k, std::int64_t i) { return (k < 0 || k >= nk) ? 0.0 : g.at(k, i); };

    std::vector<double> out(g.P.size(), 0.0);
    for (std::int64_t i = 0; i < nw; ++i) {
        const double Pw = above[static_cast<std::size_t>(i)];
        const double Pstar = weighted_below[static_cast<std::size_t>(i)];
        for (std::int64_t k = 0; k < nk; ++k) {
            const double kd = static_cast<double>(k);
            const bool open = k < g.k_max;
            const double here = P(k, i), up = P(k + 1, i), down = P(k - 1, i);
            double v = (kd + 1.0) / K * up * (Pw - (open ? here : 0.0));
            v -= kd / K * here * (Pw - down);
            v += down * (Pstar - kd / K * here);
            if (open) v -= here * (Pstar - (kd + 1.0) / K * up);
            out[static_cast<std::size_t>(k * nw + i)] = v;
        }
    }
    return out;
}

std::vector<double> rhs(const DistributionGrid& g, double a, double mutation) {
    auto out = gamma_term(g);
    const auto xi = xi_term(g);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = a * out[n] + (1.0 - a) * xi[n];
    if (mutation > 0.0) {
        for (std::int64_t k = 0; k <= g.k_max; ++k) {
            double row = 0.0;
            for (std::int64_t i = 0; i < g.n_w; ++i) row += g.at(k, i);
            const double target = row / static_cast<double>(g.n_w);
            for (std::int64_t i = 0; i < g.n_w; ++i)
                out[static_cast<std::size_t>(k * g.n_w + i)] += mutation * (target - g.at(k, i));
        }
    }
    return out;
}

double max_rate(const DistributionGrid& g, double a, double mutation) {
    return (1.0 - a) * (static_cast<double>(g.k_max) / static_cast<double>(g.K) + 1.0) + a + mutation;
}

namespace {

// RK4 real-axis stability bound is ~2.785; keep a margin.
constexpr double kStableRateStep = 2.5;

void rk4_step(DistributionGrid& g, double a, double mutation, double h) {
    const std::size_t n = g.P.size();
    const std::vector<double> y0 = g.P;
    DistributionGrid stage = g;

    const auto k1 = rhs(g, a, mutation);
    for (std::size_t m = 0; m < n; ++m) stage.P[m] = y0[m] + 0.5 * h * k1[m];
    const auto k2 = rhs(stage, a, mutation);
    for (std::size_t m = 0; m < n; ++m) stage.P[m] = y0[m] + 0.5 * h * k2[m];
    const auto k3 = rhs(stage, a, mutation);
    for (std::size_t m = 0; m < n; ++m) stage.P[m] = y0[m] + h * k3[m];
    const auto k4 = rhs(stage, a, mutation);
    for (std::size_t m = 0; m < n; ++m) g.P[m] = y0[m] + h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
}

}  // namespace

Trajectory integrate(const DistributionGrid& start, const IntegrateOptions& opt) {
    if (!(opt.dt > 0.0)) throw ValidationError(fmt::format("dt must be > 0 (got {})", opt.dt));
    if (!(opt.T >= 0.0)) throw ValidationError(fmt::format("T must be >= 0 (got {})", opt.T));
    if (!(opt.sample_every > 0.0)) throw ValidationError("sample_every must be > 0");
    if (!(opt.a >= 0.0 && opt.a <= 1.0)) throw ValidationError(fmt::format("a must lie in [0,1] (got {})", opt.a));
    if (!(opt.mutation >= 0.0)) throw ValidationError("mutation rate must be >= 0");
    start.validate();

    Trajectory traj;
    DistributionGrid g = start;

    double h = opt.dt;
    if (opt.stability_substeps) {
        const double rate = max_rate(g, opt.a, opt.mutation);
        const auto parts = static_cast<std::int64_t>(std::ceil(opt.dt * rate / kStableRateStep));
        if (parts > 1) h = opt.dt / static_cast<double>(parts);
    }

    std::vector<double> pending = opt.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0;

    // Times are reconstructed from an integer step count so that sampling
    // does not depend on accumulated floating-point sums.
    std::int64_t step_count = 0;
    double t = 0.0;
    std::int64_t sample_index = 0;
    auto record = [&] {
        const double eps = 1e-9 * h;
        while (static_cast<double>(sample_index) * opt.sample_every <= t + eps &&
               static_cast<double>(sample_index) * opt.sample_every <= opt.T + eps) {
            traj.t.push_back(static_cast<double>(sample_index) * opt.sample_every);
            traj.mean_w.push_back(mean_w(g));
            ++sample_index;
        }
        while (next_snapshot < pending.size() && pending[next_snapshot] <= t + eps) {
            traj.snapshots.push_back({pending[next_snapshot], g});
            ++next_snapshot;
        }
    };
    record();

    double t_base = 0.0;  // time at which the current step size h took effect
    while (t < opt.T - 1e-9 * h) {
        const double h_step = std::min(h, opt.T - t);
        const double mass0 = total_mass(g);
        const double deg0 = mean_degree(g);

        DistributionGrid trial = g;
        rk4_step(trial, opt.a, opt.mutation, h_step);

        // Drift of the linear invariants produced by the step itself,
        // before clipping and renormalization.
        const double mass_drift = total_mass(trial) - mass0;
        const double degree_drift = mean_degree(trial) - deg0;

        double clipped = 0.0;
        for (double& v : trial.P) {
            if (v < 0.0) {
                clipped -= v;
                v = 0.0;
            }
        }
        if (clipped > opt.clip_limit) {
            if (std::log2(opt.dt / h) >= opt.max_halvings)
                throw RuntimeFailure(fmt::format("clipped mass {:.3g} exceeds {:.3g} at t={} even with dt={:.3g}",
                                                 clipped, opt.clip_limit, t, h));
            t_base = t;
            step_count = 0;
            h *= 0.5;
            continue;
        }

        g = std::move(trial);
        ++traj.steps;
        ++step_count;
        t = (h_step < h) ? opt.T : t_base + static_cast<double>(step_count) * h;

        traj.mass_drift += mass_drift;
        traj.degree_drift += degree_drift;
        traj.max_step_mass_drift = std::max(traj.max_step_mass_drift, std::abs(mass_drift));
        traj.max_step_degree_drift = std::max(traj.max_step_degree_drift, std::abs(degree_drift));
        traj.max_clipped = std::max(traj.max_clipped, clipped);
        traj.total_clipped += clipped;

        const double mass1 = total_mass(g);
        if (!(mass1 > 0.0)) throw RuntimeFailure("master equation lost all mass");
        for (double& v : g.P) v /= mass1;
        record();
    }
    traj.final_grid = std::move(g);
    traj.dt_used = h;
    return traj;
}

void write_grid_csv(const std::filesystem::path& path, const DistributionGrid& g) {
    std::vector<std::string> rows;
    rows.reserve(g.P.size());
    for (std::int64_t k = 0; k <= g.k_max; ++k)
        for (std::int64_t i = 0; i < g.n_w; ++i)
            rows.push_back(fmt::format("{},{},{}", k, csv::real(g.w(i)), csv::real(g.at(k, i))));
    csv::write(path, "k,w,P", rows);
}

}  // namespace trustgame::master_eq
