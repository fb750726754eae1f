#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dynattack/error.hpp"
#include "dynattack/model.hpp"
#include "dynattack/random.hpp"

namespace dynattack {

using Window = std::vector<Count>;

enum class RegionMode { additive_only, free_nonnegative };

/// Admissible attacked windows relative to the clean window.
struct FeasibleRegion {
    RegionMode mode = RegionMode::free_nonnegative;
    std::optional<Count> per_step_cap;  // max |y~_t - y_t|
    std::optional<Count> total_budget;  // max sum |y~_t - y_t|

    void validate() const {
        if (per_step_cap && *per_step_cap < 0) throw ConfigError("per_step_cap must be >= 0");
        if (total_budget && *total_budget < 0) throw ConfigError("total_budget must be >= 0");
    }

    Count lower_bound(Count clean) const {
        if (mode == RegionMode::additive_only) return clean;
        return per_step_cap ? std::max<Count>(0, clean - *per_step_cap) : 0;
    }

    Count upper_bound(Count clean) const {
        return per_step_cap ? clean + *per_step_cap : std::numeric_limits<Count>::max() / 4;
    }

    bool contains(const Window& w, const Window& clean) const {
        if (w.size() != clean.size()) return false;
        Count used = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] < lower_bound(clean[i]) || w[i] > upper_bound(clean[i])) return false;
            used += w[i] > clean[i] ? w[i] - clean[i] : clean[i] - w[i];
        }
        return !total_budget || used <= *total_budget;
    }

    /// Moves entry i of a feasible window to the feasible value closest to `value`.
    Count clamp_at(const Window& w, const Window& clean, std::size_t i, Count value) const {
        Count lo = lower_bound(clean[i]);
        Count hi = upper_bound(clean[i]);
        if (total_budget) {
            Count others = 0;
            for (std::size_t j = 0; j < w.size(); ++j) {
                if (j != i) others += w[j] > clean[j] ? w[j] - clean[j] : clean[j] - w[j];
            }
            const Count remaining = std::max<Count>(0, *total_budget - others);
            lo = std::max(lo, clean[i] - remaining);
            hi = std::min(hi, clean[i] + remaining);
        }
        return std::clamp(value, lo, std::max(lo, hi));
    }
};

/// single: move one entry by +-step. mixed: half the proposals are single moves, the
/// other half transfer up to `step` units from one entry to another.
enum class ProposalKind { single, mixed };

struct SAConfig {
    double gamma_min = 0.1;
    double gamma_max = 1e4;
    double delta = 1.05;
    std::size_t iters_per_temperature = 25;
    double proposal_step_mean = 2.0;
    ProposalKind proposal = ProposalKind::single;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(gamma_min > 0.0)) throw ConfigError("gamma_min must be > 0");
        if (!(gamma_max > gamma_min)) throw ConfigError("gamma_max must exceed gamma_min");
        if (!(delta > 1.0)) throw ConfigError("delta must be > 1");
        if (iters_per_temperature < 1) throw ConfigError("iters_per_temperature must be >= 1");
        if (!(proposal_step_mean > 0.0)) throw ConfigError("proposal_step_mean must be > 0");
    }
};

struct TracePoint {
    std::size_t iteration = 0;
    double best = 0.0;
};

struct AttackResult {
    Window attacked_window;
    double objective_S_star = -std::numeric_limits<double>::infinity();
    std::vector<TracePoint> best_trace;
    bool goal_satisfied = false;
    bool feasible = false;
    std::size_t evaluations = 0;
    std::size_t accepted = 0;
};

/// What the annealer needs to know about a candidate: its score (maximized) and
/// whether it meets the attacker's goal. Candidates failing the goal are rejected.
struct Evaluation {
    double score = 0.0;
    bool goal = false;
};

template <typename F>
concept WindowEvaluator = std::invocable<F&, const Window&> &&
                          std::convertible_to<std::invoke_result_t<F&, const Window&>, Evaluation>;

/// min(1, exp(-gamma (S - S'))).
inline double acceptance_probability(double gamma, double current, double candidate) {
    if (candidate >= current) return 1.0;
    return std::exp(-gamma * (current - candidate));
}

inline bool metropolis_accept(double gamma, double current, double candidate, double u) {
    return candidate >= current || u < acceptance_probability(gamma, current, candidate);
}

/// Step size 1 + Geometric(1 / step_mean) failures, so the mean step is step_mean.
inline Count geometric_step(double step_mean, Engine& rng) {
    const double p = std::min(1.0, 1.0 / step_mean);
    if (p >= 1.0) return 1;
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    return 1 + static_cast<Count>(std::floor(std::log(u) / std::log1p(-p)));
}

/// Perturbs one uniformly chosen entry by +-step and clamps back into the region.
inline Window propose(const Window& current, const Window& clean, const FeasibleRegion& region, double step_mean,
                      Engine& rng) {
    Window next = current;
    if (next.empty()) return next;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(next.size())),
                                         next.size() - 1);
    const Count step = geometric_step(step_mean, rng);
    const Count sign = uniform01(rng) < 0.5 ? -1 : 1;
    next[i] = region.clamp_at(current, clean, i, current[i] + sign * step);
    return next;
}

/// Moves up to `step` units from one entry to another, keeping the result feasible.
inline Window propose_transfer(const Window& current, const Window& clean, const FeasibleRegion& region,
                               double step_mean, Engine& rng) {
    Window next = current;
    if (next.size() < 2) return propose(current, clean, region, step_mean, rng);
    const auto n = next.size();
    const auto from = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
    auto to = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n - 1)), n - 2);
    if (to >= from) ++to;
    const Count step = geometric_step(step_mean, rng);
    next[from] = region.clamp_at(current, clean, from, current[from] - step);
    const Count moved = current[from] - next[from];
    next[to] = region.clamp_at(next, clean, to, current[to] + moved);
    return next;
}

inline Window propose(const Window& current, const Window& clean, const FeasibleRegion& region, const SAConfig& sa,
                      Engine& rng) {
    if (sa.proposal == ProposalKind::mixed && uniform01(rng) < 0.5)
        return propose_transfer(current, clean, region, sa.proposal_step_mean, rng);
    return propose(current, clean, region, sa.proposal_step_mean, rng);
}

/// Simulated annealing over integer windows with a geometric inverse-temperature
/// schedule. Goal-failing candidates never enter the chain; the best goal-satisfying
/// window seen is returned.
template <WindowEvaluator Evaluate>
AttackResult sa_optimize(const Window& initial, const Window& clean, Evaluate&& evaluate, const FeasibleRegion& region,
                         const SAConfig& sa) {
    sa.validate();
    region.validate();
    if (!region.contains(initial, clean)) throw InputError("sa_optimize: initial window is not feasible");

    std::map<Window, Evaluation> cache;
    AttackResult result;
    auto eval = [&](const Window& w) -> Evaluation {
        auto it = cache.find(w);
        if (it != cache.end()) return it->second;
        assert(region.contains(w, clean));
        const Evaluation e = evaluate(w);
        ++result.evaluations;
        cache.emplace(w, e);
        return e;
    };

    Window current = initial;
    const Evaluation start = eval(current);
    result.feasible = true;
    result.attacked_window = current;
    result.goal_satisfied = start.goal;
    result.objective_S_star = start.score;
    result.best_trace.push_back({0, start.score});
    if (!start.goal) return result;

    double score = start.score;
    Engine rng = make_engine(sa.seed, static_cast<std::uint64_t>(Stream::anneal));
    std::size_t iteration = 0;
    for (double gamma = sa.gamma_min; gamma < sa.gamma_max; gamma *= sa.delta) {
        for (std::size_t k = 0; k < sa.iters_per_temperature; ++k) {
            ++iteration;
            Window candidate = propose(current, clean, region, sa, rng);
            const double u = uniform01(rng);
            if (candidate == current) continue;
            const Evaluation e = eval(candidate);
            if (!e.goal) continue;
            if (e.score > result.objective_S_star) {
                result.objective_S_star = e.score;
                result.attacked_window = candidate;
                result.best_trace.push_back({iteration, e.score});
            }
            if (metropolis_accept(gamma, score, e.score, u)) {
                current = std::move(candidate);
                score = e.score;
                ++result.accepted;
            }
        }
    }
    return result;
}

inline double l2_distance(const Window& a, const Window& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i] - b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace dynattack
