#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dynattack/model.hpp"

namespace da = dynattack;

namespace {

da::ModelSpec level_spec(double level, double noise = 0.0, double prior_var = 1e-18) {
    da::ModelSpec s;
    s.trend_order = 1;
    s.state_noise_variances = {noise};
    s.prior_mean = {level};
    s.prior_variances = {prior_var};
    return s;
}

}  // namespace

TEST(ModelSpec, LatentDimension) {
    da::ModelSpec s;
    s.trend_order = 2;
    s.seasonal_period = 7;
    EXPECT_EQ(s.latent_dim(), 8u);
    EXPECT_EQ(s.noise_groups(), 3u);
    s.seasonal_period.reset();
    EXPECT_EQ(s.latent_dim(), 2u);
}

TEST(ModelSpec, RejectsBadConfiguration) {
    auto s = level_spec(0.0);
    s.state_noise_variances = {-0.1};
    EXPECT_THROW(s.validate(), da::ConfigError);
    s = level_spec(0.0);
    s.prior_variances = {0.0};
    EXPECT_THROW(s.validate(), da::ConfigError);
    s = level_spec(0.0);
    s.trend_order = 3;
    EXPECT_THROW(s.validate(), da::ConfigError);
    s = level_spec(0.0);
    s.seasonal_period = 7;  // missing seasonal noise/prior entries
    EXPECT_THROW(s.validate(), da::ConfigError);
    EXPECT_THROW(da::simulate(level_spec(0.0), 0, 1), da::InputError);
}

TEST(Simulate, ZeroNoiseLevelIsConstantAndCountsArePoissonDraws) {
    const double mu = std::log(5.0);
    const auto sim = da::simulate(level_spec(mu), 3, 42);
    ASSERT_EQ(sim.series.size(), 3u);
    for (const auto& x : sim.latent) EXPECT_NEAR(x[0], mu, 1e-8);

    auto obs = da::make_engine(42, 1);
    for (auto y : sim.series.counts) {
        std::poisson_distribution<da::Count> pois(std::exp(sim.latent[0][0]));
        EXPECT_EQ(y, pois(obs));
    }
}

TEST(Simulate, DeterministicGivenSeed) {
    auto s = level_spec(std::log(20.0), 0.01, 0.1);
    const auto a = da::simulate(s, 50, 7);
    const auto b = da::simulate(s, 50, 7);
    EXPECT_EQ(a.series, b.series);
    EXPECT_EQ(a.latent, b.latent);
    const auto c = da::simulate(s, 50, 8);
    EXPECT_NE(a.series, c.series);
}

TEST(Simulate, SlopeDrivesLinearLevel) {
    da::ModelSpec s;
    s.trend_order = 2;
    s.state_noise_variances = {0.0, 0.0};
    s.prior_mean = {1.0, 0.01};
    s.prior_variances = {1e-30, 1e-30};
    const auto sim = da::simulate(s, 25, 3);
    double level = 1.0;
    for (std::size_t t = 0; t < sim.latent.size(); ++t) {
        level += 0.01;
        EXPECT_NEAR(sim.latent[t][0], level, 1e-12);
        EXPECT_NEAR(sim.latent[t][1], 0.01, 1e-14);
    }
}

TEST(Simulate, SeasonalComponentsRotate) {
    da::ModelSpec s;
    s.trend_order = 1;
    s.seasonal_period = 4;
    s.state_noise_variances = {0.0, 0.0};
    s.prior_mean = {0.0, 0.3, -0.1, 0.2};
    s.prior_variances = {1e-30, 1e-30, 1e-30, 1e-30};
    const auto sim = da::simulate(s, 8, 1);
    // effects cycle with period 4 and sum to zero over a cycle
    const double expected[4] = {-0.4, 0.2, -0.1, 0.3};
    for (std::size_t t = 0; t < 8; ++t) EXPECT_NEAR(sim.latent[t][1], expected[t % 4], 1e-12) << t;
}

TEST(DefaultPrior, ScalesLevelToData) {
    da::TimeSeries ts{0, {4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 100}};
    da::ModelSpec s;
    s.trend_order = 2;
    s.seasonal_period = 7;
    s.state_noise_variances = {0.01, 0.0, 0.0};
    const auto p = da::with_default_prior(s, ts);
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(p.prior_mean[0], std::log(5.0), 1e-12);
    EXPECT_DOUBLE_EQ(p.prior_variances[0], 1.0);
    for (std::size_t i = 1; i < p.latent_dim(); ++i) {
        EXPECT_DOUBLE_EQ(p.prior_mean[i], 0.0);
        EXPECT_DOUBLE_EQ(p.prior_variances[i], 0.1);
    }
}
