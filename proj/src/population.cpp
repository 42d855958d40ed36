#include "trustgame/population.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "trustgame/error.hpp"

namespace trustgame {

void SimParams::validate() const {
    if (N < 2) throw ValidationError(fmt::format("N must be >= 2 (got {})", N));
    if (N > 0xffffffffLL) throw ValidationError(fmt::format("N too large (got {})", N));
    if (K < 1) throw ValidationError(fmt::format("K must be >= 1 (got {})", K));
    if (K > N - 2) throw ValidationError(fmt::format("K must be <= N-2 (got K={}, N={})", K, N));
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError(fmt::format("a must lie in [0,1] (got {})", a));
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError(fmt::format("r must lie in [0,1] (got {})", r));
    if (burn_in_sweeps < 0) throw ValidationError("burn-in must be >= 0");
    if (measure_sweeps < 0) throw ValidationError("sweeps must be >= 0");
    if (record_every_sweeps < 1) throw ValidationError("record-every must be >= 1");
}

Population::Population(std::int64_t K, std::vector<double> w, std::vector<agent_t> out_edges)
    : K_(K), w_(std::move(w)), out_edges_(std::move(out_edges)) {
    const auto n = static_cast<std::int64_t>(w_.size());
    if (K_ < 1 || K_ > n - 2) throw ValidationError("population: K must satisfy 1 <= K <= N-2");
    if (static_cast<std::int64_t>(out_edges_.size()) != n * K_)
        throw ValidationError("population: out_edges must hold exactly N*K entries");
    in_degree_.assign(w_.size(), 0);
    for (agent_t i = 0; i < n; ++i) {
        const auto edges = this->out_edges(i);
        for (std::size_t s = 0; s < edges.size(); ++s) {
            const agent_t j = edges[s];
            if (j >= n || j == i) throw ValidationError("population: out-edge target invalid or self");
            if (std::find(edges.begin(), edges.begin() + s, j) != edges.begin() + s)
                throw ValidationError("population: duplicate out-edge");
            ++in_degree_[j];
        }
    }
    for (const double v : w_)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("population: w outside [0,1]");
    refresh_w_sum();
}

void Population::refresh_w_sum() {
    w_sum_ = 0.0;
    for (const double v : w_) w_sum_ += v;
}

bool Population::has_edge(agent_t from, agent_t to) const {
    const auto edges = out_edges(from);
    return std::find(edges.begin(), edges.end(), to) != edges.end();
}

bool Population::check_invariants() const {
    const auto n = size();
    std::vector<std::int32_t> recount(w_.size(), 0);
    double sum = 0.0;
    for (agent_t i = 0; i < n; ++i) {
        const auto edges = out_edges(i);
        for (std::size_t s = 0; s < edges.size(); ++s) {
            if (edges[s] >= n || edges[s] == i) return false;
            for (std::size_t t = 0; t < s; ++t)
                if (edges[t] == edges[s]) return false;
            ++recount[edges[s]];
        }
        if (!(w_[i] >= 0.0 && w_[i] <= 1.0)) return false;
        sum += w_[i];
    }
    if (recount != in_degree_) return false;
    return std::abs(sum - w_sum_) <= 1e-9 * static_cast<double>(n);
}

void Population::write_csv(std::ostream& out) const {
    out << "agent_id,w,in_degree\n";
    for (agent_t i = 0; i < size(); ++i) out << fmt::format("{},{:.17g},{}\n", i, w_[i], in_degree_[i]);
}

double donator_payoff(const Population& pop, agent_t i) {
    double p = 0.0;
    for (const agent_t j : pop.out_edges(i)) p += pop.w(j);
    return p;
}

bool rewire(Population& pop, agent_t i, std::size_t slot, agent_t l) {
    agent_t& target = pop.out_edges_[static_cast<std::size_t>(i) * static_cast<std::size_t>(pop.K_) + slot];
    const agent_t j = target;
    if (pop.w_[l] < pop.w_[j]) return false;
    target = l;
    --pop.in_degree_[j];
    ++pop.in_degree_[l];
    return true;
}

bool imitate(Population& pop, agent_t i, agent_t j) {
    if (rewarder_payoff(pop, j) < rewarder_payoff(pop, i)) return false;
    pop.w_sum_ += pop.w_[j] - pop.w_[i];
    pop.w_[i] = pop.w_[j];
    return true;
}

bool donator_update(Population& pop, Rng& rng, agent_t i) {
    const auto n = static_cast<std::uint64_t>(pop.size());
    const auto slot = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(pop.K())));

    // K <= N-2 guarantees at least one admissible candidate.
    agent_t l;
    do {
        l = static_cast<agent_t>(rng.below(n));
    } while (l == i || pop.has_edge(i, l));
    return rewire(pop, i, slot, l);
}

bool rewarder_update(Population& pop, Rng& rng, agent_t i) {
    const auto n = static_cast<std::uint64_t>(pop.size());
    auto j = static_cast<agent_t>(rng.below(n - 1));
    if (j >= i) ++j;
    return imitate(pop, i, j);
}

agent_t apply_noise(Population& pop, Rng& rng) {
    const auto i = static_cast<agent_t>(rng.below(static_cast<std::uint64_t>(pop.size())));
    set_w(pop, i, rng.uniform());
    return i;
}

void set_w(Population& pop, agent_t i, double value) {
    pop.w_sum_ += value - pop.w_[i];
    pop.w_[i] = value;
}

}  // namespace trustgame
