#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynattack/error.hpp"
#include "dynattack/random.hpp"

namespace dynattack {

using Count = std::int64_t;

/// Observed count series y_{t0}, y_{t0+1}, ...
struct TimeSeries {
    std::int64_t start_index = 0;
    std::vector<Count> counts;

    std::size_t size() const { return counts.size(); }
    bool empty() const { return counts.empty(); }
    std::int64_t end_index() const { return start_index + static_cast<std::int64_t>(counts.size()) - 1; }
    bool contains(std::int64_t t) const { return t >= start_index && t <= end_index(); }

    Count at(std::int64_t t) const {
        if (!contains(t)) throw InputError("time index " + std::to_string(t) + " outside series");
        return counts[static_cast<std::size_t>(t - start_index)];
    }

    void validate() const {
        for (Count y : counts) {
            if (y < 0) throw InputError("negative count in time series");
        }
    }

    /// Copy of the series up to and including time t.
    TimeSeries truncated(std::int64_t t) const {
        TimeSeries out{start_index, {}};
        if (t < start_index) return out;
        const auto n = std::min<std::size_t>(counts.size(), static_cast<std::size_t>(t - start_index + 1));
        out.counts.assign(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }

    bool operator==(const TimeSeries&) const = default;
};

/// Conditionally Poisson dynamic model with log link.
///
/// Latent state x_t = (level, [slope], [s(1), ..., s(p-1)]):
///   level_t = level_{t-1} + slope_{t-1} + e_level
///   slope_t = slope_{t-1} + e_slope
///   s_t(1)  = -(s_{t-1}(1) + ... + s_{t-1}(p-1)) + e_seasonal,  s_t(j) = s_{t-1}(j-1)
///   y_t | x_t ~ Poisson(exp(level_t + s_t(1)))
/// One noise variance per component group, in the order level, slope, seasonal.
struct ModelSpec {
    int trend_order = 1;
    std::optional<int> seasonal_period;
    std::vector<double> state_noise_variances{0.0};
    std::vector<double> prior_mean{0.0};
    std::vector<double> prior_variances{1.0};

    bool has_slope() const { return trend_order == 2; }
    bool has_seasonal() const { return seasonal_period.has_value(); }
    std::size_t seasonal_dim() const { return has_seasonal() ? static_cast<std::size_t>(*seasonal_period - 1) : 0; }
    std::size_t latent_dim() const { return static_cast<std::size_t>(trend_order) + seasonal_dim(); }
    std::size_t noise_groups() const {
        return static_cast<std::size_t>(trend_order) + (has_seasonal() ? 1 : 0);
    }
    std::size_t seasonal_offset() const { return static_cast<std::size_t>(trend_order); }

    void validate() const {
        if (trend_order != 1 && trend_order != 2) throw ConfigError("trend_order must be 1 or 2");
        if (seasonal_period && *seasonal_period < 2) throw ConfigError("seasonal_period must be >= 2");
        if (state_noise_variances.size() != noise_groups())
            throw ConfigError("state_noise_variances needs " + std::to_string(noise_groups()) + " entries");
        for (double v : state_noise_variances) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("state noise variances must be >= 0");
        }
        if (prior_mean.size() != latent_dim()) throw ConfigError("prior_mean has wrong dimension");
        if (prior_variances.size() != latent_dim()) throw ConfigError("prior_variances has wrong dimension");
        for (double m : prior_mean) {
            if (!std::isfinite(m)) throw ConfigError("prior_mean must be finite");
        }
        for (double v : prior_variances) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("prior variances must be > 0");
        }
    }

    double log_rate(std::span<const double> x) const {
        return has_seasonal() ? x[0] + x[seasonal_offset()] : x[0];
    }

    bool operator==(const ModelSpec&) const = default;
};

/// Weakly informative data-scaled prior: level mean log(mean of first 10 counts + 1)
/// with variance 1; slope and seasonal components mean 0, variance 0.1.
inline ModelSpec with_default_prior(ModelSpec spec, const TimeSeries& series) {
    const auto n = std::min<std::size_t>(10, series.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += static_cast<double>(series.counts[i]);
    if (n > 0) mean /= static_cast<double>(n);
    spec.prior_mean.assign(spec.latent_dim(), 0.0);
    spec.prior_variances.assign(spec.latent_dim(), 0.1);
    spec.prior_mean[0] = std::log(mean + 1.0);
    spec.prior_variances[0] = 1.0;
    return spec;
}

namespace detail {

/// Noise standard deviation for each latent coordinate (seasonal noise only hits s(1)).
inline std::vector<double> coordinate_noise_sd(const ModelSpec& spec) {
    std::vector<double> sd(spec.latent_dim(), 0.0);
    sd[0] = std::sqrt(spec.state_noise_variances[0]);
    if (spec.has_slope()) sd[1] = std::sqrt(spec.state_noise_variances[1]);
    if (spec.has_seasonal()) sd[spec.seasonal_offset()] = std::sqrt(spec.state_noise_variances.back());
    return sd;
}

inline void draw_prior(const ModelSpec& spec, std::span<double> x, Engine& rng) {
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = spec.prior_mean[i] + std::sqrt(spec.prior_variances[i]) * normal(rng);
    }
}

/// One transition step in place. Always consumes exactly noise_groups() normals so
/// that callers sharing a seed stay aligned.
inline void evolve(const ModelSpec& spec, std::span<double> x, std::span<const double> noise_sd,
                   std::normal_distribution<double>& normal, Engine& rng) {
    const double e_level = normal(rng);
    const double slope = spec.has_slope() ? x[1] : 0.0;
    x[0] += slope + noise_sd[0] * e_level;
    if (spec.has_slope()) x[1] += noise_sd[1] * normal(rng);
    if (spec.has_seasonal()) {
        const std::size_t off = spec.seasonal_offset();
        const std::size_t m = spec.seasonal_dim();
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += x[off + j];
        for (std::size_t j = m - 1; j > 0; --j) x[off + j] = x[off + j - 1];
        x[off] = -sum + noise_sd[off] * normal(rng);
    }
}

inline double rate_from_log(double log_rate) {
    // exp(700) is still finite; anything above is treated as the same huge rate.
    return std::exp(std::min(log_rate, 700.0));
}

inline Count draw_poisson(double rate, Engine& rng) {
    if (!(rate > 0.0)) return 0;
    std::poisson_distribution<Count> pois(std::min(rate, 1e15));
    return pois(rng);
}

}  // namespace detail

/// Simulated series plus the latent path that generated it (row t holds x_t).
struct Simulation {
    TimeSeries series;
    std::vector<std::vector<double>> latent;
};

/// Draws x_{t0-1} from the prior, then evolves and emits `horizon` Poisson counts.
inline Simulation simulate(const ModelSpec& spec, std::int64_t horizon, std::uint64_t seed,
                           std::int64_t start_index = 0) {
    spec.validate();
    if (horizon < 1) throw InputError("simulate: horizon must be >= 1");
    Engine state_rng = make_engine(seed, 0);
    Engine obs_rng = make_engine(seed, 1);
    const auto sd = detail::coordinate_noise_sd(spec);
    std::normal_distribution<double> normal;

    std::vector<double> x(spec.latent_dim());
    detail::draw_prior(spec, x, state_rng);

    Simulation sim;
    sim.series.start_index = start_index;
    sim.series.counts.reserve(static_cast<std::size_t>(horizon));
    sim.latent.reserve(static_cast<std::size_t>(horizon));
    for (std::int64_t t = 0; t < horizon; ++t) {
        detail::evolve(spec, x, sd, normal, state_rng);
        sim.latent.push_back(x);
        sim.series.counts.push_back(detail::draw_poisson(detail::rate_from_log(spec.log_rate(x)), obs_rng));
    }
    return sim;
}

}  // namespace dynattack
