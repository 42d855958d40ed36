#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "trustgame/engine.hpp"
#include "trustgame/error.hpp"

using namespace trustgame;

TEST_CASE("initial network has K distinct non-self targets per agent") {
    SimParams p;
    p.N = 10;
    p.K = 3;
    Rng rng(1);
    const auto pop = init_population(p, rng);
    for (agent_t i = 0; i < 10; ++i) {
        const auto e = pop.out_edges(i);
        const std::set<agent_t> s(e.begin(), e.end());
        CHECK(s.size() == 3);
        CHECK(s.count(i) == 0);
    }
    CHECK(std::accumulate(pop.in_degrees().begin(), pop.in_degrees().end(), 0) == 30);
    CHECK(pop.check_invariants());
}

TEST_CASE("one agent's initial in-degree is Binomial(N-1, K/(N-1))") {
    SimParams p;
    p.N = 50;
    p.K = 3;
    std::vector<std::int64_t> counts(50, 0);
    for (std::uint64_t s = 0; s < 20000; ++s) {
        Rng rng(s + 100);
        const auto pop = init_population(p, rng);
        ++counts[static_cast<std::size_t>(pop.in_degree(0))];
    }
    CHECK(oracle::chi_square(counts, oracle::binomial(49, 3.0 / 49.0, 49)).p > 0.01);
}

TEST_CASE("initial conditions") {
    SimParams p;
    p.N = 1000;
    p.init = InitialCondition::all_ones;
    Rng rng(3);
    CHECK(init_population(p, rng).mean_w() == 1.0);
    p.init = InitialCondition::uniform;
    const auto pop = init_population(p, rng);
    CHECK(pop.mean_w() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("update-rate extremes keep the other role frozen") {
    SimParams p;
    p.N = 300;
    p.K = 2;
    p.r = 0.0;
    Rng rng(9);

    p.a = 0.0;
    auto pop = init_population(p, rng);
    const std::vector<double> w0(pop.w_values().begin(), pop.w_values().end());
    for (int n = 0; n < 100000; ++n) step(pop, p, rng);
    CHECK(std::equal(w0.begin(), w0.end(), pop.w_values().begin()));

    p.a = 1.0;
    pop = init_population(p, rng);
    std::vector<agent_t> e0;
    for (agent_t i = 0; i < 300; ++i) e0.insert(e0.end(), pop.out_edges(i).begin(), pop.out_edges(i).end());
    for (int n = 0; n < 100000; ++n) step(pop, p, rng);
    std::vector<agent_t> e1;
    for (agent_t i = 0; i < 300; ++i) e1.insert(e1.end(), pop.out_edges(i).begin(), pop.out_edges(i).end());
    CHECK(e0 == e1);
}

TEST_CASE("rewarder updates happen with probability a") {
    SimParams p;
    p.N = 500;
    p.K = 2;
    p.a = 0.5;
    p.r = 0.0;
    Rng rng(11);
    auto pop = init_population(p, rng);
    const int n = 1000000;
    int rewarder = 0;
    for (int s = 0; s < n; ++s) rewarder += step(pop, p, rng).rewarder;
    CHECK(std::abs(rewarder - 0.5 * n) < 3.0 * std::sqrt(0.25 * n));
}

TEST_CASE("noise fires with probability r") {
    SimParams p;
    p.N = 200;
    p.K = 1;
    p.r = 0.01;
    Rng rng(12);
    auto pop = init_population(p, rng);
    const int n = 1000000;
    int noise = 0;
    for (int s = 0; s < n; ++s) noise += step(pop, p, rng).noise;
    CHECK(std::abs(noise - 0.01 * n) < 3.0 * std::sqrt(0.01 * 0.99 * n));
}

TEST_CASE("run is deterministic in the seed") {
    SimParams p;
    p.N = 2000;
    p.K = 2;
    p.a = 0.4;
    p.r = 1e-3;
    p.burn_in_sweeps = 20;
    p.measure_sweeps = 50;
    const auto r1 = run(p);
    const auto r2 = run(p);
    CHECK(r1.series.values == r2.series.values);
    CHECK(r1.degrees.counts == r2.degrees.counts);
    CHECK(r1.series.values.size() == 50);
    p.seed = 2;
    CHECK(run(p).series.values != r1.series.values);
}

TEST_CASE("without noise a homogeneous population never changes its mean") {
    SimParams p;
    p.N = 1000;
    p.K = 3;
    p.a = 0.5;
    p.r = 0.0;
    p.init = InitialCondition::all_ones;
    p.burn_in_sweeps = 0;
    p.measure_sweeps = 30;
    const auto res = run(p);
    for (double v : res.series.values) CHECK(v == 1.0);
    CHECK(res.variance_w == 0.0);
}

TEST_CASE("histogram accumulates one count per agent per snapshot") {
    SimParams p;
    p.N = 1000;
    p.K = 2;
    p.burn_in_sweeps = 5;
    p.measure_sweeps = 20;
    p.record_every_sweeps = 4;
    const auto res = run(p);
    CHECK(res.series.values.size() == 5);
    CHECK(res.degrees.n_snapshots == 5);
    CHECK(res.degrees.total() == 5 * 1000);
    CHECK(res.last_snapshot.total() == 1000);
    std::int64_t edges = 0;
    for (std::size_t k = 0; k < res.last_snapshot.counts.size(); ++k)
        edges += static_cast<std::int64_t>(k) * res.last_snapshot.counts[k];
    CHECK(edges == 2000);
}

TEST_CASE("low update rate keeps trust high") {
    SimParams p;
    p.N = 100000;
    p.K = 1;
    p.a = 0.1;
    p.r = 1e-6;
    p.burn_in_sweeps = 200;
    p.measure_sweeps = 200;
    const auto res = run(p);
    const auto& v = res.series.values;
    const double second_half = std::accumulate(v.begin() + 100, v.end(), 0.0) / 100.0;
    CHECK(second_half > 0.95);
}

TEST_CASE("fluctuations grow above the critical rate") {
    SimParams p;
    p.N = 10000;
    p.K = 1;
    p.r = 1e-4;
    p.burn_in_sweeps = 300;
    p.measure_sweeps = 1000;
    p.a = 0.1;
    const double low = run(p).variance_w;
    p.a = 0.8;
    const double high = run(p).variance_w;
    CHECK(high > 10.0 * low);
}

TEST_CASE("sweep rows are ordered and independent of the worker count") {
    SimParams base;
    base.N = 3000;
    base.r = 1e-4;
    base.burn_in_sweeps = 30;
    base.measure_sweeps = 60;
    const std::vector<std::int64_t> Ks{1, 3};
    const std::vector<double> as{0.05, 0.3, 0.8};
    const auto one = sweep(base, Ks, as, 2, 1);
    const auto many = sweep(base, Ks, as, 2, 8);
    REQUIRE(one.size() == 12);
    REQUIRE(many.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(one[i].K == many[i].K);
        CHECK(one[i].a == many[i].a);
        CHECK(one[i].seed == many[i].seed);
        CHECK(one[i].mean_w == many[i].mean_w);
        CHECK(one[i].variance_w == many[i].variance_w);
        CHECK(one[i].ok());
    }
    for (std::size_t i = 1; i < 12; ++i) {
        const bool ordered = std::tie(one[i - 1].K, one[i - 1].a, one[i - 1].seed) <
                             std::tie(one[i].K, one[i].a, one[i].seed);
        CHECK(ordered);
    }
}

TEST_CASE("sweep replicates below the critical rate stay near full trust") {
    SimParams base;
    base.N = 10000;
    base.r = 1e-6;
    base.burn_in_sweeps = 400;
    base.measure_sweeps = 200;
    const auto rows = sweep(base, {1}, {0.05}, 3, 1);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(r.mean_w > 0.95);
}

TEST_CASE("a failing cell is reported without stopping the sweep") {
    SimParams base;
    base.N = 20;
    base.burn_in_sweeps = 1;
    base.measure_sweeps = 2;
    const auto rows = sweep(base, {1, 19}, {0.2}, 1, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].ok());
    CHECK_FALSE(rows[1].ok());
    CHECK(rows[1].error.find("K") != std::string::npos);
}

TEST_CASE("invalid parameters name the field") {
    SimParams p;
    p.K = 0;
    try {
        p.validate();
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).rfind("K", 0) == 0);
    }
    p.K = 1;
    p.a = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}
