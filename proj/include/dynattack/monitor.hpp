#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dynattack/distributions.hpp"
#include "dynattack/error.hpp"
#include "dynattack/filter.hpp"
#include "dynattack/model.hpp"

namespace dynattack {

struct MonitorConfig {
    double variance_inflation_k = 2.0;
    double alarm_threshold_tau = 0.1;
    double likelihood_floor = kLikelihoodFloor;

    void validate() const {
        if (!(variance_inflation_k > 1.0)) throw ConfigError("variance_inflation_k must be > 1");
        if (!(alarm_threshold_tau > 0.0 && alarm_threshold_tau <= 1.0))
            throw ConfigError("alarm_threshold_tau must lie in (0, 1]");
        if (!(likelihood_floor > 0.0)) throw ConfigError("likelihood_floor must be > 0");
    }
};

struct MonitorTrace {
    std::vector<std::int64_t> times;
    std::vector<double> H;
    std::vector<double> V;
    std::vector<bool> alarms;

    std::size_t size() const { return times.size(); }
    bool any_alarm() const { return std::find(alarms.begin(), alarms.end(), true) != alarms.end(); }

    bool operator==(const MonitorTrace&) const = default;
};

/// Mean-matched, overdispersed alternative predictive: negative binomial with
/// mean m and variance k * v. Falls back to Poisson(m) when k * v <= m.
inline double alternative_pmf(const PredictiveSummary& model, double k, Count y) {
    if (!(k > 1.0)) throw ConfigError("alternative_pmf: k must be > 1");
    if (y < 0) throw InputError("alternative_pmf: negative observation");
    const double m = model.mean;
    const double var = k * model.variance;
    if (!(m > 0.0)) return y == 0 ? 1.0 : 0.0;
    if (var <= m) return poisson_pmf(y, m);
    const double size = m * m / (var - m);
    return negbin_pmf(y, size, size / (size + m));
}

inline double local_bayes_factor(double p_model, double p_alt, double floor = kLikelihoodFloor) {
    return std::max(p_model, floor) / std::max(p_alt, floor);
}

/// V_t = H_t * min(1, V_{t-1}); start the recursion with v_prev = 1.
inline double cumulative_min_update(double v_prev, double h_t) { return h_t * std::min(1.0, v_prev); }

/// Running monitor: the filter state plus the last V.
struct MonitorState {
    FilterState filter;
    double v_prev = 1.0;
};

/// Advances the filter over `ys` (times filter.time_index + 1, ...) and appends H, V
/// and alarm flags to `trace`.
inline MonitorState monitor_steps(MonitorState st, std::span<const Count> ys, const MonitorConfig& cfg,
                                  MonitorTrace& trace) {
    for (Count y : ys) {
        auto step = filter_step(st.filter, y, cfg.likelihood_floor);
        const double p_alt = alternative_pmf(step.predictive, cfg.variance_inflation_k, y);
        const double h = local_bayes_factor(step.likelihood, p_alt, cfg.likelihood_floor);
        const double v = cumulative_min_update(st.v_prev, h);
        trace.times.push_back(step.state.time_index);
        trace.H.push_back(h);
        trace.V.push_back(v);
        trace.alarms.push_back(v < cfg.alarm_threshold_tau);
        st.filter = std::move(step.state);
        st.v_prev = v;
    }
    return st;
}

inline MonitorTrace run_monitor(const TimeSeries& series, const ModelSpec& spec, const MonitorConfig& cfg,
                                std::size_t n_particles, std::uint64_t seed) {
    cfg.validate();
    if (series.empty()) throw InputError("run_monitor: empty series");
    series.validate();
    MonitorTrace trace;
    monitor_steps({filter_init(spec, n_particles, seed, series.start_index), 1.0}, series.counts, cfg, trace);
    return trace;
}

/// Smallest V over times in [from, to].
inline double min_v_between(const MonitorTrace& trace, std::int64_t from, std::int64_t to) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace.times[i] >= from && trace.times[i] <= to) best = std::min(best, trace.V[i]);
    }
    return best;
}

inline bool alarm_between(const MonitorTrace& trace, std::int64_t from, std::int64_t to) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace.times[i] >= from && trace.times[i] <= to && trace.alarms[i]) return true;
    }
    return false;
}

}  // namespace dynattack
