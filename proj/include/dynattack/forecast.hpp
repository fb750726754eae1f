#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "dynattack/error.hpp"
#include "dynattack/filter.hpp"
#include "dynattack/model.hpp"
#include "dynattack/random.hpp"

namespace dynattack {

/// Sample paths of future counts; row p holds y_{origin+1..origin+horizon} of path p.
struct ForecastSamples {
    std::int64_t origin = 0;
    std::size_t horizon = 0;
    std::size_t n_paths = 0;
    std::vector<Count> draws;

    Count at(std::size_t path, std::size_t step) const { return draws[path * horizon + (step - 1)]; }
    std::span<const Count> path(std::size_t p) const { return {draws.data() + p * horizon, horizon}; }
};

namespace detail {

/// Sample paths with observations drawn only where `observe[k]` is set (others stay 0).
/// Path p draws its latent trajectory from stream (seed, p, 0) and the count at step k
/// from stream (seed, p, k), so a column does not depend on which other columns are drawn.
inline ForecastSamples forecast_masked(const FilterState& state, std::size_t horizon, std::size_t n_paths,
                                       std::uint64_t seed, const std::vector<bool>& observe) {
    if (horizon < 1) throw InputError("forecast: horizon must be >= 1");
    if (n_paths < 1) throw InputError("forecast: n_paths must be >= 1");
    const ModelSpec& spec = state.spec;
    const std::size_t n = state.size();
    const std::size_t dim = state.dim();
    const auto sd = coordinate_noise_sd(spec);

    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += state.weights[i];
        cum[i] = acc;
    }

    ForecastSamples fs;
    fs.origin = state.time_index;
    fs.horizon = horizon;
    fs.n_paths = n_paths;
    fs.draws.assign(horizon * n_paths, 0);
    std::vector<double> x(dim);
    for (std::size_t p = 0; p < n_paths; ++p) {
        Engine latent_rng = make_engine(seed, p, 0);
        std::normal_distribution<double> normal;
        const double u = uniform01(latent_rng) * acc;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t pick = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), n - 1);
        const auto src = state.particle(pick);
        std::copy(src.begin(), src.end(), x.begin());
        for (std::size_t k = 0; k < horizon; ++k) {
            evolve(spec, x, sd, normal, latent_rng);
            if (!observe[k]) continue;
            Engine obs_rng = make_engine(seed, p, k + 1);
            fs.draws[p * horizon + k] = draw_poisson(rate_from_log(spec.log_rate(x)), obs_rng);
        }
    }
    return fs;
}

}  // namespace detail

/// Posterior predictive sample paths: pick a particle by weight, then alternate
/// latent propagation and Poisson draws.
inline ForecastSamples forecast(const FilterState& state, std::size_t horizon, std::size_t n_paths,
                                std::uint64_t seed) {
    return detail::forecast_masked(state, horizon, n_paths, seed, std::vector<bool>(horizon, true));
}

/// Arithmetic mean of column `at_step` (1-based).
inline double predictive_mean(const ForecastSamples& fs, std::size_t at_step) {
    if (at_step < 1 || at_step > fs.horizon) throw InputError("predictive_mean: step out of range");
    double sum = 0.0;
    for (std::size_t p = 0; p < fs.n_paths; ++p) sum += static_cast<double>(fs.at(p, at_step));
    return sum / static_cast<double>(fs.n_paths);
}

}  // namespace dynattack
