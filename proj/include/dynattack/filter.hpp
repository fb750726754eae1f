#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dynattack/distributions.hpp"
#include "dynattack/error.hpp"
#include "dynattack/model.hpp"
#include "dynattack/random.hpp"

namespace dynattack {

inline constexpr double kLikelihoodFloor = 1e-300;

/// Particle approximation of the posterior over x_t given y_{t0..t}.
/// Particles are stored row-major, one latent vector per row.
struct FilterState {
    std::int64_t time_index = 0;
    ModelSpec spec;
    std::vector<double> particles;
    std::vector<double> weights;
    std::uint64_t seed = 0;      // every step draws from derive_seed(seed, Stream::filter, t)
    std::uint64_t steps_taken = 0;

    std::size_t size() const { return weights.size(); }
    std::size_t dim() const { return spec.latent_dim(); }
    std::span<const double> particle(std::size_t i) const { return {particles.data() + i * dim(), dim()}; }
};

/// Moments of the one-step predictive distribution of y.
struct PredictiveSummary {
    double mean = 0.0;
    double variance = 0.0;
};

struct FilterStep {
    FilterState state;
    double likelihood = 0.0;  // p(y_t | D_{t-1}), floored
    PredictiveSummary predictive;
};

/// Particles drawn from the prior, uniform weights, positioned just before t0.
inline FilterState filter_init(const ModelSpec& spec, std::size_t n_particles, std::uint64_t seed,
                               std::int64_t start_index = 0) {
    spec.validate();
    if (n_particles == 0) throw ConfigError("filter_init: n_particles must be >= 1");
    FilterState st;
    st.time_index = start_index - 1;
    st.spec = spec;
    st.seed = seed;
    st.particles.resize(n_particles * spec.latent_dim());
    st.weights.assign(n_particles, 1.0 / static_cast<double>(n_particles));
    Engine rng = make_engine(seed, static_cast<std::uint64_t>(Stream::prior));
    for (std::size_t i = 0; i < n_particles; ++i) {
        detail::draw_prior(spec, {st.particles.data() + i * spec.latent_dim(), spec.latent_dim()}, rng);
    }
    return st;
}

namespace detail {

/// Systematic resampling: returns the selected ancestor indices.
inline std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u0) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> idx(n);
    const double step = 1.0 / static_cast<double>(n);
    double cum = weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (u0 + static_cast<double>(i)) * step;
        while (u > cum && j + 1 < n) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

}  // namespace detail

/// Bootstrap step: propagate, weight by the Poisson likelihood of y, resample.
inline FilterStep filter_step(const FilterState& state, Count y, double likelihood_floor = kLikelihoodFloor) {
    if (y < 0) throw InputError("filter_step: negative observation");
    const ModelSpec& spec = state.spec;
    const std::size_t n = state.size();
    const std::size_t dim = state.dim();
    const std::int64_t t = state.time_index + 1;

    Engine rng = make_engine(state.seed, static_cast<std::uint64_t>(Stream::filter), static_cast<std::uint64_t>(t));
    std::normal_distribution<double> normal;
    const auto sd = detail::coordinate_noise_sd(spec);

    std::vector<double> moved = state.particles;
    std::vector<double> logw(n);
    double m1 = 0.0;
    double m2 = 0.0;
    double max_logw = -std::numeric_limits<double>::infinity();
    const double yd = static_cast<double>(y);
    const double log_y_factorial = std::lgamma(yd + 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> x{moved.data() + i * dim, dim};
        detail::evolve(spec, x, sd, normal, rng);
        const double log_rate = std::min(spec.log_rate(x), 700.0);
        const double rate = std::exp(log_rate);
        const double w = state.weights[i];
        m1 += w * rate;
        m2 += w * (rate + rate * rate);
        logw[i] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
                  (rate > 0.0 ? yd * log_rate - rate - log_y_factorial
                              : (y == 0 ? 0.0 : -std::numeric_limits<double>::infinity()));
        if (logw[i] > max_logw) max_logw = logw[i];
    }
    const double u0 = uniform01(rng);

    FilterStep out;
    out.predictive.mean = m1;
    out.predictive.variance = std::max(0.0, m2 - m1 * m1);
    out.state.time_index = t;
    out.state.spec = spec;
    out.state.seed = state.seed;
    out.state.steps_taken = state.steps_taken + 1;

    std::vector<double> w(n);
    if (max_logw == -std::numeric_limits<double>::infinity()) {
        // No particle can explain y: keep the propagated cloud with its prior weights.
        out.likelihood = likelihood_floor;
        w = state.weights;
    } else {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::exp(logw[i] - max_logw);
            sum += w[i];
        }
        for (double& wi : w) wi /= sum;
        out.likelihood = std::max(std::exp(max_logw + std::log(sum)), likelihood_floor);
    }

    const auto ancestors = detail::systematic_resample(w, u0);
    out.state.particles.resize(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = moved.data() + ancestors[i] * dim;
        std::copy(src, src + dim, out.state.particles.data() + i * dim);
    }
    out.state.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

/// Filters every observation of `series` starting from `state`.
inline FilterState filter_series(FilterState state, std::span<const Count> ys) {
    for (Count y : ys) state = filter_step(state, y).state;
    return state;
}

}  // namespace dynattack
