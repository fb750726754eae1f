#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynattack/annealing.hpp"
#include "dynattack/decision.hpp"
#include "dynattack/error.hpp"
#include "dynattack/filter.hpp"
#include "dynattack/forecast.hpp"
#include "dynattack/model.hpp"
#include "dynattack/monitor.hpp"

namespace dynattack {

/// Observations alpha - h, ..., alpha are under the attacker's control.
struct AttackWindow {
    std::int64_t alpha = 0;
    std::int64_t h = 0;

    std::int64_t first() const { return alpha - h; }
    std::size_t size() const { return static_cast<std::size_t>(h + 1); }
};

/// Decisions (by table position) the attacker wants the defender to take.
struct AttackGoal {
    enum class Kind { decision_equals, decision_in_set };
    Kind kind = Kind::decision_equals;
    std::vector<std::size_t> targets;

    static AttackGoal equals(std::size_t d) { return {Kind::decision_equals, {d}}; }
    static AttackGoal in_set(std::vector<std::size_t> ds) { return {Kind::decision_in_set, std::move(ds)}; }
    static AttackGoal at_most(std::size_t d) {
        std::vector<std::size_t> ds(d + 1);
        for (std::size_t i = 0; i <= d; ++i) ds[i] = i;
        return in_set(std::move(ds));
    }

    void validate() const {
        if (targets.empty()) throw ConfigError("attack goal has no target decision");
    }
    bool contains(std::size_t d) const { return std::find(targets.begin(), targets.end(), d) != targets.end(); }

    /// Distance in decision order from d to the nearest target.
    std::size_t distance(std::size_t d) const {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (auto t : targets) best = std::min(best, t > d ? t - d : d - t);
        return best;
    }
};

/// Everything the attacker knows about the defender, plus the clean run up to the
/// checkpoint just before the window. Every candidate is evaluated from that
/// checkpoint with the same filter and forecast seeds.
struct AttackContext {
    TimeSeries series;  // clean data up to alpha
    ModelSpec spec;
    MonitorConfig monitor;
    DecisionProblem problem;
    AttackWindow window;
    std::size_t n_particles = 2000;
    std::size_t n_paths = 2000;
    std::uint64_t filter_seed = 0;
    std::uint64_t forecast_seed = 0;

    MonitorState checkpoint;
    MonitorTrace prefix_trace;
    Window clean_window;
};

inline AttackContext make_attack_context(const TimeSeries& series, const ModelSpec& spec, const MonitorConfig& monitor,
                                         DecisionProblem problem, const AttackWindow& window, std::size_t n_particles,
                                         std::size_t n_paths, std::uint64_t filter_seed, std::uint64_t forecast_seed) {
    spec.validate();
    monitor.validate();
    series.validate();
    if (window.h < 0) throw ConfigError("attack window: h must be >= 0");
    if (!series.contains(window.first()) || !series.contains(window.alpha))
        throw ConfigError("attack window lies outside the observed series");
    std::visit([](const auto& p) { p.validate(); }, problem);

    AttackContext ctx;
    ctx.series = series.truncated(window.alpha);
    ctx.spec = spec;
    ctx.monitor = monitor;
    ctx.problem = std::move(problem);
    ctx.window = window;
    ctx.n_particles = n_particles;
    ctx.n_paths = n_paths;
    ctx.filter_seed = filter_seed;
    ctx.forecast_seed = forecast_seed;

    const auto& ys = ctx.series.counts;
    const auto split = static_cast<std::size_t>(window.first() - series.start_index);
    MonitorState start{filter_init(spec, n_particles, filter_seed, series.start_index), 1.0};
    ctx.checkpoint =
        monitor_steps(std::move(start), std::span<const Count>(ys.data(), split), monitor, ctx.prefix_trace);
    ctx.clean_window.assign(ys.begin() + static_cast<std::ptrdiff_t>(split), ys.end());

    if (auto* inv = std::get_if<InventoryProblem>(&ctx.problem); inv && !inv->d_max) {
        MonitorTrace scratch;
        const auto st = monitor_steps(ctx.checkpoint, ctx.clean_window, monitor, scratch);
        const auto fs = forecast(st.filter, inv->last_step(), n_paths, forecast_seed);
        inv->d_max = default_d_max(weekend_demand(*inv, fs));
    }
    return ctx;
}

/// The defender's view of one candidate window.
struct WindowEvaluation {
    MonitorTrace trace;  // H, V over the window only
    double min_v = 0.0;
    FilterState final_state;
    ExpectedUtilityTable table;
    std::size_t decision = 0;
};

inline WindowEvaluation evaluate_window(const AttackContext& ctx, const Window& w) {
    if (w.size() != ctx.window.size()) throw InputError("attack: window has wrong length");
    for (Count y : w) {
        if (y < 0) throw InputError("attack: negative count in window");
    }
    WindowEvaluation out;
    auto st = monitor_steps(ctx.checkpoint, w, ctx.monitor, out.trace);
    out.min_v = *std::min_element(out.trace.V.begin(), out.trace.V.end());
    const auto mask = required_steps(ctx.problem);
    const auto fs = detail::forecast_masked(st.filter, mask.size(), ctx.n_paths, ctx.forecast_seed, mask);
    out.table = expected_utilities(ctx.problem, fs);
    out.decision = out.table.argmax;
    out.final_state = std::move(st.filter);
    return out;
}

/// min of the attacked V over t in [alpha - h, alpha].
inline double objective_bayes(const Window& w, const AttackContext& ctx) { return evaluate_window(ctx, w).min_v; }

inline bool goal_satisfied(const Window& w, const AttackGoal& goal, const AttackContext& ctx) {
    return goal.contains(evaluate_window(ctx, w).decision);
}

/// Clean series with the window replaced.
inline TimeSeries splice(const AttackContext& ctx, const Window& w) {
    TimeSeries out = ctx.series;
    const auto split = static_cast<std::size_t>(ctx.window.first() - ctx.series.start_index);
    std::copy(w.begin(), w.end(), out.counts.begin() + static_cast<std::ptrdiff_t>(split));
    return out;
}

struct InitialAttack {
    bool feasible = false;
    Window window;
    std::size_t shifts = 0;
    std::size_t closest_decision = 0;
    std::size_t evaluations = 0;
};

/// Uniformly shifts the whole clean window by 1, 2, ... in the goal's direction
/// (clamped to the region) until the defender's decision lands in the goal.
inline InitialAttack initial_feasible_attack(const AttackGoal& goal, const FeasibleRegion& region,
                                             const AttackContext& ctx, std::size_t max_shifts = 5000) {
    goal.validate();
    region.validate();
    const Window& clean = ctx.clean_window;
    InitialAttack out;
    const auto first = evaluate_window(ctx, clean);
    ++out.evaluations;
    out.closest_decision = first.decision;
    if (goal.contains(first.decision)) {
        out.feasible = true;
        out.window = clean;
        return out;
    }
    const bool up = std::any_of(goal.targets.begin(), goal.targets.end(),
                                [&](std::size_t d) { return d > first.decision; });
    const Count dir = up ? 1 : -1;

    Window previous = clean;
    for (std::size_t s = 1; s <= max_shifts; ++s) {
        Window cand(clean.size());
        for (std::size_t i = 0; i < clean.size(); ++i) {
            const Count v = clean[i] + dir * static_cast<Count>(s);
            cand[i] = std::clamp(v, region.lower_bound(clean[i]), region.upper_bound(clean[i]));
        }
        if (!region.contains(cand, clean) || cand == previous) break;
        const auto e = evaluate_window(ctx, cand);
        ++out.evaluations;
        if (goal.distance(e.decision) < goal.distance(out.closest_decision)) out.closest_decision = e.decision;
        if (goal.contains(e.decision)) {
            out.feasible = true;
            out.window = std::move(cand);
            out.shifts = s;
            return out;
        }
        previous = std::move(cand);
    }
    return out;
}

namespace detail {

template <typename Score>
AttackResult run_attack(const AttackGoal& goal, const FeasibleRegion& region, const SAConfig& sa,
                        const AttackContext& ctx, Score score) {
    const auto init = initial_feasible_attack(goal, region, ctx);
    if (!init.feasible) {
        AttackResult r;
        r.feasible = false;
        r.attacked_window = ctx.clean_window;
        r.evaluations = init.evaluations;
        return r;
    }
    auto evaluate = [&](const Window& w) {
        const auto e = evaluate_window(ctx, w);
        return Evaluation{score(w, e), goal.contains(e.decision)};
    };
    auto r = sa_optimize(init.window, ctx.clean_window, evaluate, region, sa);
    r.evaluations += init.evaluations;
    return r;
}

}  // namespace detail

/// Attack that keeps the monitor quiet: maximize min V over the window.
/// The chain runs on log min V so acceptance does not stall once V is small;
/// S* and the trace are reported on the min V scale.
inline AttackResult bayes_attack(const AttackGoal& goal, const FeasibleRegion& region, const SAConfig& sa,
                                 const AttackContext& ctx) {
    auto r = detail::run_attack(goal, region, sa, ctx,
                                [](const Window&, const WindowEvaluation& e) { return std::log(e.min_v); });
    if (!r.feasible) return r;
    r.objective_S_star = evaluate_window(ctx, r.attacked_window).min_v;
    for (auto& p : r.best_trace) p.best = std::exp(p.best);
    if (!r.best_trace.empty()) r.best_trace.back().best = r.objective_S_star;
    return r;
}

/// Baseline attack: smallest L2 perturbation that achieves the goal (score = -norm).
inline AttackResult norm_attack(const AttackGoal& goal, const FeasibleRegion& region, const SAConfig& sa,
                                const AttackContext& ctx) {
    return detail::run_attack(goal, region, sa, ctx, [&](const Window& w, const WindowEvaluation&) {
        return -l2_distance(w, ctx.clean_window);
    });
}

}  // namespace dynattack
