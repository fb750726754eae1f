#include <set>

#include <gtest/gtest.h>

#include "dynattack/annealing.hpp"
#include "toy_instances.hpp"

namespace da = dynattack;
using namespace dynattack_test;

TEST(Propose, ZeroCapKeepsWindow) {
    da::FeasibleRegion r;
    r.per_step_cap = 0;
    const da::Window clean{3, 4, 5};
    auto rng = da::make_engine(1, 0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(da::propose(clean, clean, r, 2.0, rng), clean);
}

TEST(Propose, AdditiveNeverGoesBelowClean) {
    da::FeasibleRegion r;
    r.mode = da::RegionMode::additive_only;
    const da::Window clean{3, 0, 5};
    auto rng = da::make_engine(2, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto w = da::propose(clean, clean, r, 2.0, rng);
        for (std::size_t j = 0; j < w.size(); ++j) EXPECT_GE(w[j], clean[j]);
    }
}

TEST(Propose, StatisticalSmoke) {
    da::FeasibleRegion r;
    r.mode = da::RegionMode::free_nonnegative;
    r.per_step_cap = 6;
    r.total_budget = 10;
    const da::Window clean{10, 1, 10, 10, 0, 10};
    const da::Window current{12, 0, 10, 7, 0, 10};
    ASSERT_TRUE(r.contains(current, clean));
    auto rng = da::make_engine(3, 0);
    std::set<std::size_t> touched;
    bool up = false, down = false;
    for (int i = 0; i < 10000; ++i) {
        const auto w = da::propose(current, clean, r, 2.0, rng);
        ASSERT_TRUE(r.contains(w, clean));
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] != current[j]) {
                touched.insert(j);
                (w[j] > current[j] ? up : down) = true;
            }
        }
    }
    EXPECT_TRUE(up);
    EXPECT_TRUE(down);
    EXPECT_GE(touched.size(), 3u);
}

TEST(GeometricStep, MeanMatches) {
    auto rng = da::make_engine(4, 0);
    double s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto k = da::geometric_step(3.0, rng);
        ASSERT_GE(k, 1);
        s += static_cast<double>(k);
    }
    EXPECT_NEAR(s / n, 3.0, 0.03);
}

TEST(Acceptance, ImprovementsAlwaysAccepted) {
    EXPECT_DOUBLE_EQ(da::acceptance_probability(5.0, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(da::acceptance_probability(5.0, 1.0, 2.0), 1.0);
    EXPECT_NEAR(da::acceptance_probability(2.0, 1.0, 0.5), std::exp(-1.0), 1e-15);
    EXPECT_TRUE(da::metropolis_accept(1e9, 0.3, 0.3, 0.999999));
}

TEST(Acceptance, ColdChainRejectsWorse) {
    auto rng = da::make_engine(5, 0);
    int accepted = 0;
    for (int i = 0; i < 10000; ++i) accepted += da::metropolis_accept(1e6, 1.0, 0.99, da::uniform01(rng));
    EXPECT_EQ(accepted, 0);
}

TEST(SAConfig, Validation) {
    da::SAConfig c;
    EXPECT_NO_THROW(c.validate());
    c.delta = 1.0;
    EXPECT_THROW(c.validate(), da::ConfigError);
    c = {};
    c.gamma_max = c.gamma_min;
    EXPECT_THROW(c.validate(), da::ConfigError);
}

TEST(SaOptimize, SingletonRegionReturnsStart) {
    da::FeasibleRegion r;
    r.per_step_cap = 0;
    const da::Window clean{2, 2};
    auto eval = [](const da::Window&) { return da::Evaluation{0.25, true}; };
    const auto res = da::sa_optimize(clean, clean, eval, r, da::SAConfig{});
    EXPECT_EQ(res.attacked_window, clean);
    EXPECT_DOUBLE_EQ(res.objective_S_star, 0.25);
    EXPECT_TRUE(res.goal_satisfied);
    EXPECT_EQ(res.evaluations, 1u);
}

TEST(SaOptimize, RejectsInfeasibleStart) {
    da::FeasibleRegion r;
    r.per_step_cap = 1;
    auto eval = [](const da::Window&) { return da::Evaluation{0.0, true}; };
    EXPECT_THROW(da::sa_optimize(da::Window{9}, da::Window{2}, eval, r, da::SAConfig{}), da::InputError);
}

TEST(SaOptimize, QuadraticToyMatchesExhaustiveSearch) {
    const auto toy = quadratic_toy();
    ASSERT_EQ(enumerate_feasible(toy).size(), 125u);
    const double best = exhaustive_optimum(toy);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        da::SAConfig sa;
        sa.gamma_min = 0.1;
        sa.gamma_max = 1e4;
        sa.delta = 1.5;
        sa.iters_per_temperature = 50;
        sa.seed = seed;
        std::size_t infeasible = 0;
        auto checked = [&](const da::Window& w) {
            infeasible += !toy.region.contains(w, toy.clean);
            return toy.evaluate(w);
        };
        const auto res = da::sa_optimize(toy.clean, toy.clean, checked, toy.region, sa);
        EXPECT_NEAR(res.objective_S_star, best, 1e-9) << "seed " << seed;
        EXPECT_EQ(infeasible, 0u);
        for (std::size_t i = 1; i < res.best_trace.size(); ++i) {
            EXPECT_GE(res.best_trace[i].best, res.best_trace[i - 1].best);
            EXPECT_GT(res.best_trace[i].iteration, res.best_trace[i - 1].iteration);
        }
        EXPECT_GE(res.objective_S_star, res.best_trace.front().best);
    }
}

TEST(SaOptimize, NormToyFindsSparseLift) {
    const auto toy = norm_toy();
    const auto res = da::sa_optimize(first_goal_window(toy), toy.clean, toy.evaluate, toy.region, da::SAConfig{});
    EXPECT_NEAR(res.objective_S_star, -3.0, 1e-12);
    EXPECT_EQ(res.attacked_window, (da::Window{4, 7}));
}

TEST(SaOptimize, GoalFailuresNeverEnterTheChain) {
    const auto toy = rugged_toy();
    const auto res = da::sa_optimize(first_goal_window(toy), toy.clean, toy.evaluate, toy.region, da::SAConfig{});
    EXPECT_TRUE(toy.evaluate(res.attacked_window).goal);
    EXPECT_NEAR(res.objective_S_star, exhaustive_optimum(toy), 1e-12);
}
