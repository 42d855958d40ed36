#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "trustgame/rng.hpp"

namespace trustgame {

using agent_t = std::uint32_t;

enum class InitialCondition { uniform, all_ones };

struct SimParams {
    std::int64_t N = 100000;
    std::int64_t K = 1;
    double a = 0.1;
    double r = 1e-6;
    std::uint64_t seed = 1;
    std::int64_t burn_in_sweeps = 1000;
    std::int64_t measure_sweeps = 10000;
    std::int64_t record_every_sweeps = 1;
    InitialCondition init = InitialCondition::uniform;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Full agent state of one run.
///
/// Every agent is simultaneously a donator (it keeps exactly K distinct
/// out-edges to rewarders, never itself) and a rewarder (it has a value for
/// money w and an in-degree k). Out-edges live in one flat array, K slots
/// per agent.
class Population {
public:
    Population() = default;

    /// Builds a population from explicit state. Validates every invariant.
    Population(std::int64_t K, std::vector<double> w, std::vector<agent_t> out_edges);

    std::int64_t size() const { return static_cast<std::int64_t>(w_.size()); }
    std::int64_t K() const { return K_; }

    double w(agent_t i) const { return w_[i]; }
    std::int32_t in_degree(agent_t i) const { return in_degree_[i]; }
    std::span<const agent_t> out_edges(agent_t i) const {
        return {out_edges_.data() + static_cast<std::size_t>(i) * K_, static_cast<std::size_t>(K_)};
    }
    std::span<const double> w_values() const { return w_; }
    std::span<const std::int32_t> in_degrees() const { return in_degree_; }

    double w_sum() const { return w_sum_; }
    double mean_w() const { return w_sum_ / static_cast<double>(w_.size()); }

    /// Recomputes w_sum from scratch (drift control for long runs).
    void refresh_w_sum();

    bool has_edge(agent_t from, agent_t to) const;

    /// Checks all structural invariants; returns false on the first violation.
    bool check_invariants() const;

    void write_csv(std::ostream& out) const;

private:
    friend bool rewire(Population&, agent_t, std::size_t, agent_t);
    friend bool imitate(Population&, agent_t, agent_t);
    friend void set_w(Population&, agent_t, double);

    std::int64_t K_ = 0;
    std::vector<double> w_;
    std::vector<agent_t> out_edges_;
    std::vector<std::int32_t> in_degree_;
    double w_sum_ = 0.0;
};

/// P+_i: sum of w over the rewarders agent i donates to.
double donator_payoff(const Population& pop, agent_t i);

/// P-_i = (1 - w_i) k_i.
inline double rewarder_payoff(const Population& pop, agent_t i) {
    return (1.0 - pop.w(i)) * static_cast<double>(pop.in_degree(i));
}

/// Deterministic core of the donator rule: the edge in `slot` of agent i
/// (pointing at j) moves to l when w_l >= w_j. l must differ from i and
/// from every current rewarder of i.
bool rewire(Population& pop, agent_t i, std::size_t slot, agent_t l);

/// Deterministic core of the rewarder rule: i copies w_j when
/// P-_j >= P-_i.
bool imitate(Population& pop, agent_t i, agent_t j);

/// Rewiring rule. One current rewarder j of i and one candidate l (not i,
/// not already a rewarder of i) are drawn; the edge moves to l when
/// w_l >= w_j. Returns whether the edge moved.
bool donator_update(Population& pop, Rng& rng, agent_t i);

/// Replication rule. A random j != i is drawn; i copies w_j when
/// P-_j >= P-_i. Returns whether a copy happened (even if w_j == w_i).
bool rewarder_update(Population& pop, Rng& rng, agent_t i);

/// A uniformly chosen agent draws a fresh w from [0, 1). Returns that agent.
agent_t apply_noise(Population& pop, Rng& rng);

/// Overwrites one agent's w, keeping w_sum consistent.
void set_w(Population& pop, agent_t i, double value);

}  // namespace trustgame
