#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dynattack/annealing.hpp"
#include "dynattack/attack.hpp"
#include "dynattack/decision.hpp"
#include "dynattack/error.hpp"
#include "dynattack/forecast.hpp"
#include "dynattack/io.hpp"
#include "dynattack/model.hpp"
#include "dynattack/monitor.hpp"
#include "dynattack/random.hpp"

namespace dynattack {

/// Which simulated series to keep. A seed qualifies when the clean window is
/// quiet (min V >= min_clean_window_v) and, for the ad problem, the clean
/// predictive mean at beta lies in [min_ratio, max_ratio] x C/R.
struct SeedSearch {
    std::size_t max_seeds = 50;
    std::optional<double> min_ratio;
    std::optional<double> max_ratio;
    std::optional<double> min_clean_window_v;
};

struct SeriesSource {
    enum class Kind { simulate, csv };
    Kind kind = Kind::simulate;
    std::int64_t length = 0;
    std::filesystem::path path;
    std::optional<SeedSearch> seed_search;
};

struct GoalSpec {
    enum class Kind { decision_equals, decision_in_set, at_most_fraction };
    Kind kind = Kind::decision_equals;
    std::vector<std::size_t> decisions;
    double fraction = 0.8;
};

struct ScenarioConfig {
    std::string name = "custom";
    std::uint64_t master_seed = 0;
    ModelSpec model;
    SeriesSource series;
    DecisionProblem problem;
    AttackWindow window;
    FeasibleRegion region;
    GoalSpec goal;
    SAConfig sa;
    bool compare_with_norm = false;
    MonitorConfig monitor;
    std::size_t n_particles = 2000;
    std::size_t n_paths = 2000;
};

inline json default_scenario_json(const std::string& name) {
    if (name == "ad_company") {
        return json::parse(R"({
  "name": "ad_company",
  "master_seed": 0,
  "model": {
    "trend_order": 2,
    "seasonal_period": null,
    "state_noise_variances": [0.002, 1e-8],
    "prior_mean": [3.912023005428146, 0.0005],
    "prior_variances": [0.01, 1e-8]
  },
  "series": {
    "source": "simulate",
    "length": 501,
    "seed_search": {"max_seeds": 50, "min_ratio": 0.6, "max_ratio": 0.95, "min_clean_window_v": 0.3}
  },
  "decision": {"kind": "ad", "C": 100, "R": 0.95, "beta": 550},
  "attack": {
    "alpha": 500,
    "h": 20,
    "region": {"mode": "additive_only", "per_step_cap": null, "total_budget": null},
    "goal": {"kind": "decision_equals", "decision": "place"},
    "compare_with_norm": false,
    "sa": {"gamma_min": 0.1, "gamma_max": 10000, "delta": 1.05, "iters_per_temperature": 25,
           "proposal": "mixed", "proposal_step_mean": 4}
  },
  "monitor": {"variance_inflation_k": 2, "alarm_threshold_tau": 0.1, "likelihood_floor": 1e-300},
  "n_particles": 2000,
  "n_forecast_paths": 2000
})");
    }
    if (name == "inventory") {
        return json::parse(R"({
  "name": "inventory",
  "master_seed": 0,
  "model": {
    "trend_order": 2,
    "seasonal_period": 7,
    "state_noise_variances": [0.001, 1e-6, 0.0001],
    "prior_mean": [4.605170185988092, 0, 0.4, 0.4, -0.3, -0.3, -0.3, -0.3],
    "prior_variances": [0.01, 1e-6, 0.005, 0.005, 0.005, 0.005, 0.005, 0.005]
  },
  "series": {
    "source": "simulate",
    "length": 71,
    "seed_search": {"max_seeds": 50, "min_clean_window_v": 0.3}
  },
  "decision": {"kind": "inventory", "p": 2, "c": 1, "s": 0.3, "weekend_steps": [5, 6, 7], "d_max": null},
  "attack": {
    "alpha": 70,
    "h": 20,
    "region": {"mode": "free_nonnegative", "per_step_cap": null, "total_budget": null},
    "goal": {"kind": "at_most_fraction", "fraction": 0.8},
    "compare_with_norm": true,
    "sa": {"gamma_min": 0.1, "gamma_max": 10000, "delta": 1.05, "iters_per_temperature": 25,
           "proposal": "mixed", "proposal_step_mean": 3}
  },
  "monitor": {"variance_inflation_k": 2, "alarm_threshold_tau": 0.1, "likelihood_floor": 1e-300},
  "n_particles": 2000,
  "n_forecast_paths": 2000
})");
    }
    throw ConfigError("unknown scenario '" + name + "' (expected ad_company or inventory)");
}

namespace detail {

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

inline std::size_t ad_decision_index(const json& d) {
    if (d.is_number_unsigned()) return d.get<std::size_t>();
    const auto s = d.get<std::string>();
    if (s == "skip") return kSkip;
    if (s == "place") return kPlace;
    throw ConfigError("ad decision must be 'skip' or 'place', got '" + s + "'");
}

inline std::size_t decision_index(const DecisionProblem& problem, const json& d) {
    if (std::holds_alternative<AdPlacementProblem>(problem)) return ad_decision_index(d);
    if (!d.is_number_unsigned()) throw ConfigError("inventory decisions are non-negative integers");
    return d.get<std::size_t>();
}

}  // namespace detail

/// Parses a full scenario document. Unknown "name" values are allowed when every
/// section is given; known names are merged over their built-in defaults first.
inline ScenarioConfig scenario_from_json(const json& doc) {
    json j = doc;
    const std::string name = doc.value("name", std::string("custom"));
    if (name == "ad_company" || name == "inventory") {
        j = default_scenario_json(name);
        j.merge_patch(doc);
    }
    ScenarioConfig c;
    try {
        c.name = name;
        c.master_seed = j.value("master_seed", std::uint64_t{0});
        c.model = spec_from_json(j.at("model"));

        const auto& src = j.at("series");
        const auto kind = src.value("source", std::string("simulate"));
        if (kind == "simulate") {
            c.series.kind = SeriesSource::Kind::simulate;
            c.series.length = src.at("length").get<std::int64_t>();
            if (src.contains("seed_search") && !src["seed_search"].is_null()) {
                const auto& ss = src["seed_search"];
                SeedSearch s;
                s.max_seeds = ss.value("max_seeds", std::size_t{50});
                s.min_ratio = detail::optional_field<double>(ss, "min_ratio");
                s.max_ratio = detail::optional_field<double>(ss, "max_ratio");
                s.min_clean_window_v = detail::optional_field<double>(ss, "min_clean_window_v");
                c.series.seed_search = s;
            }
        } else if (kind == "csv") {
            c.series.kind = SeriesSource::Kind::csv;
            c.series.path = src.at("path").get<std::string>();
        } else {
            throw ConfigError("series.source must be 'simulate' or 'csv'");
        }

        const auto& a = j.at("attack");
        c.window.alpha = a.at("alpha").get<std::int64_t>();
        c.window.h = a.at("h").get<std::int64_t>();

        const auto& d = j.at("decision");
        const auto dkind = d.at("kind").get<std::string>();
        if (dkind == "ad") {
            AdPlacementProblem p;
            p.cost_C = d.value("C", 100.0);
            p.reward_R = d.value("R", 0.95);
            const auto beta = d.at("beta").get<std::int64_t>();
            if (beta <= c.window.alpha) throw ConfigError("decision.beta must exceed attack.alpha");
            p.target_step = static_cast<std::size_t>(beta - c.window.alpha);
            c.problem = p;
        } else if (dkind == "inventory") {
            InventoryProblem p;
            p.price_p = d.value("p", 2.0);
            p.unit_cost_c = d.value("c", 1.0);
            p.resale_s = d.value("s", 0.0);
            p.weekend_steps = d.value("weekend_steps", std::vector<std::size_t>{5, 6, 7});
            p.d_max = detail::optional_field<std::int64_t>(d, "d_max");
            c.problem = p;
        } else {
            throw ConfigError("decision.kind must be 'ad' or 'inventory'");
        }

        const auto& r = a.value("region", json::object());
        const auto mode = r.value("mode", std::string("free_nonnegative"));
        if (mode == "additive_only") {
            c.region.mode = RegionMode::additive_only;
        } else if (mode == "free_nonnegative") {
            c.region.mode = RegionMode::free_nonnegative;
        } else {
            throw ConfigError("attack.region.mode must be 'additive_only' or 'free_nonnegative'");
        }
        c.region.per_step_cap = detail::optional_field<Count>(r, "per_step_cap");
        c.region.total_budget = detail::optional_field<Count>(r, "total_budget");

        const auto& g = a.at("goal");
        const auto gkind = g.at("kind").get<std::string>();
        if (gkind == "decision_equals") {
            c.goal.kind = GoalSpec::Kind::decision_equals;
            c.goal.decisions = {detail::decision_index(c.problem, g.at("decision"))};
        } else if (gkind == "decision_in_set") {
            c.goal.kind = GoalSpec::Kind::decision_in_set;
            for (const auto& v : g.at("decisions")) c.goal.decisions.push_back(detail::decision_index(c.problem, v));
        } else if (gkind == "at_most_fraction") {
            if (!std::holds_alternative<InventoryProblem>(c.problem))
                throw ConfigError("goal at_most_fraction needs an inventory decision problem");
            c.goal.kind = GoalSpec::Kind::at_most_fraction;
            c.goal.fraction = g.value("fraction", 0.8);
            if (!(c.goal.fraction >= 0.0)) throw ConfigError("goal fraction must be >= 0");
        } else {
            throw ConfigError("attack.goal.kind must be decision_equals, decision_in_set or at_most_fraction");
        }
        c.compare_with_norm = a.value("compare_with_norm", false);

        const auto& s = a.value("sa", json::object());
        c.sa.gamma_min = s.value("gamma_min", c.sa.gamma_min);
        c.sa.gamma_max = s.value("gamma_max", c.sa.gamma_max);
        c.sa.delta = s.value("delta", c.sa.delta);
        c.sa.iters_per_temperature = s.value("iters_per_temperature", c.sa.iters_per_temperature);
        c.sa.proposal_step_mean = s.value("proposal_step_mean", c.sa.proposal_step_mean);
        const auto prop = s.value("proposal", std::string("single"));
        if (prop == "single") {
            c.sa.proposal = ProposalKind::single;
        } else if (prop == "mixed") {
            c.sa.proposal = ProposalKind::mixed;
        } else {
            throw ConfigError("attack.sa.proposal must be 'single' or 'mixed'");
        }

        const auto& m = j.value("monitor", json::object());
        c.monitor.variance_inflation_k = m.value("variance_inflation_k", c.monitor.variance_inflation_k);
        c.monitor.alarm_threshold_tau = m.value("alarm_threshold_tau", c.monitor.alarm_threshold_tau);
        c.monitor.likelihood_floor = m.value("likelihood_floor", c.monitor.likelihood_floor);

        c.n_particles = j.value("n_particles", c.n_particles);
        c.n_paths = j.value("n_forecast_paths", c.n_paths);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }

    c.model.validate();
    c.monitor.validate();
    c.region.validate();
    c.sa.validate();
    std::visit([](const auto& p) { p.validate(); }, c.problem);
    if (c.window.h < 0 || c.window.first() < 0) throw ConfigError("attack window must satisfy 0 <= alpha - h");
    if (c.series.kind == SeriesSource::Kind::simulate && c.series.length <= c.window.alpha)
        throw ConfigError("series.length must exceed attack.alpha");
    if (c.n_particles == 0 || c.n_paths == 0) throw ConfigError("n_particles and n_forecast_paths must be >= 1");
    return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json_file(path)); }

inline ScenarioConfig builtin_scenario(const std::string& name) { return scenario_from_json(default_scenario_json(name)); }

/// Seeds for each stage, all derived from the master seed.
struct ScenarioSeeds {
    std::uint64_t filter = 0;
    std::uint64_t forecast = 0;
    std::uint64_t anneal = 0;

    static ScenarioSeeds from_master(std::uint64_t master) {
        return {stream_seed(master, Stream::filter), stream_seed(master, Stream::forecast),
                stream_seed(master, Stream::anneal)};
    }
};

inline std::uint64_t candidate_series_seed(std::uint64_t master, std::size_t i) {
    return derive_seed(master, static_cast<std::uint64_t>(Stream::scenario_search), i);
}

struct ScenarioSeries {
    TimeSeries series;
    std::optional<std::uint64_t> simulation_seed;
    std::size_t candidates_tried = 0;
};

inline AttackContext scenario_context(const ScenarioConfig& cfg, const TimeSeries& series) {
    const auto seeds = ScenarioSeeds::from_master(cfg.master_seed);
    return make_attack_context(series, cfg.model, cfg.monitor, cfg.problem, cfg.window, cfg.n_particles, cfg.n_paths,
                               seeds.filter, seeds.forecast);
}

namespace detail {

inline bool series_qualifies(const ScenarioConfig& cfg, const SeedSearch& search, const TimeSeries& series) {
    const auto ctx = scenario_context(cfg, series);
    const auto e = evaluate_window(ctx, ctx.clean_window);
    if (search.min_clean_window_v && e.min_v < *search.min_clean_window_v) return false;
    if (const auto* ad = std::get_if<AdPlacementProblem>(&ctx.problem)) {
        const double ratio = (e.table.psi[kPlace] + ad->cost_C) / ad->reward_R / ad->threshold();
        if (search.min_ratio && ratio < *search.min_ratio) return false;
        if (search.max_ratio && ratio > *search.max_ratio) return false;
    }
    return true;
}

}  // namespace detail

/// The clean series: read from CSV, or simulated from the model (the first
/// qualifying candidate seed when a seed search is configured).
inline ScenarioSeries load_series(const ScenarioConfig& cfg) {
    ScenarioSeries out;
    if (cfg.series.kind == SeriesSource::Kind::csv) {
        out.series = read_series_csv(cfg.series.path);
        return out;
    }
    const auto n = cfg.series.seed_search ? cfg.series.seed_search->max_seeds : 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto seed = candidate_series_seed(cfg.master_seed, i);
        auto sim = simulate(cfg.model, cfg.series.length, seed);
        ++out.candidates_tried;
        if (!cfg.series.seed_search || detail::series_qualifies(cfg, *cfg.series.seed_search, sim.series)) {
            out.series = std::move(sim.series);
            out.simulation_seed = seed;
            return out;
        }
    }
    throw ConfigError("seed search: none of " + std::to_string(n) + " simulated series met the criteria");
}

inline AttackGoal resolve_goal(const GoalSpec& spec, std::size_t clean_decision) {
    switch (spec.kind) {
        case GoalSpec::Kind::decision_equals:
            return AttackGoal::equals(spec.decisions.at(0));
        case GoalSpec::Kind::decision_in_set:
            return AttackGoal::in_set(spec.decisions);
        case GoalSpec::Kind::at_most_fraction:
            return AttackGoal::at_most(
                static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(clean_decision))));
    }
    throw ConfigError("unknown goal kind");
}

/// Full-horizon forecast from a filter state; its observed columns match the
/// masked forecast used inside the attack.
inline ForecastSamples decision_forecast(const AttackContext& ctx, const FilterState& state) {
    return forecast(state, required_horizon(ctx.problem), ctx.n_paths, ctx.forecast_seed);
}

inline MonitorTrace full_trace(const AttackContext& ctx, const MonitorTrace& window_trace) {
    MonitorTrace t = ctx.prefix_trace;
    t.times.insert(t.times.end(), window_trace.times.begin(), window_trace.times.end());
    t.H.insert(t.H.end(), window_trace.H.begin(), window_trace.H.end());
    t.V.insert(t.V.end(), window_trace.V.begin(), window_trace.V.end());
    t.alarms.insert(t.alarms.end(), window_trace.alarms.begin(), window_trace.alarms.end());
    return t;
}

enum class AttackKind { bayes, norm };

inline const char* to_string(AttackKind k) { return k == AttackKind::bayes ? "bayes" : "norm"; }

inline AttackResult run_scenario_attack(AttackKind kind, const ScenarioConfig& cfg, const AttackContext& ctx,
                                        const AttackGoal& goal) {
    SAConfig sa = cfg.sa;
    sa.seed = ScenarioSeeds::from_master(cfg.master_seed).anneal;
    return kind == AttackKind::bayes ? bayes_attack(goal, cfg.region, sa, ctx) : norm_attack(goal, cfg.region, sa, ctx);
}

inline json decision_summary(const AttackContext& ctx, const WindowEvaluation& e, const ForecastSamples& fs) {
    json j{{"decision", e.table.decisions[e.decision]}, {"psi", e.table.psi[e.decision]}};
    if (const auto* ad = std::get_if<AdPlacementProblem>(&ctx.problem)) {
        j["predictive_mean_at_beta"] = predictive_mean(fs, ad->target_step);
        j["threshold_C_over_R"] = ad->threshold();
    }
    j["window_min_V"] = e.min_v;
    j["window_alarm"] = e.trace.any_alarm();
    return j;
}

/// Writes the artifacts of one attack into `dir` and returns its summary.
inline json write_attack_artifacts(const std::filesystem::path& dir, AttackKind kind, const AttackContext& ctx,
                                   const AttackResult& r, const WindowEvaluation& clean) {
    const auto attacked = evaluate_window(ctx, r.attacked_window);
    const auto fs = decision_forecast(ctx, attacked.final_state);
    write_text_file(dir / "attack.json", attack_to_json(r).dump(2) + "\n");
    write_csv_file(dir / "trace.csv", write_trace_csv, r);
    write_csv_file(dir / "attacked.csv", write_series_csv, splice(ctx, r.attacked_window));
    write_csv_file(dir / "monitor_attacked.csv", write_monitor_csv, full_trace(ctx, attacked.trace));
    write_csv_file(dir / "decision_attacked.csv", write_decision_csv, attacked.table);
    write_csv_file(dir / "forecast_attacked.csv", write_forecast_csv, fs);

    json j = decision_summary(ctx, attacked, fs);
    j["objective"] = kind == AttackKind::bayes ? "max_min_V" : "min_L2";
    j["feasible"] = r.feasible;
    j["goal_satisfied"] = r.goal_satisfied;
    j["S_star"] = number_or_null(r.objective_S_star);
    j["l2_distance"] = l2_distance(r.attacked_window, ctx.clean_window);
    j["evaluations"] = r.evaluations;
    j["decision_flipped"] = r.feasible && r.goal_satisfied && attacked.decision != clean.decision;
    const double ratio = clean.min_v > 0.0 ? attacked.min_v / clean.min_v : 0.0;
    j["min_V_ratio_to_clean"] = ratio;
    // "Not substantially different" operationalized as ratio >= 0.5 and no alarm.
    j["monitor_not_substantially_different"] = ratio >= 0.5 && !attacked.trace.any_alarm();
    return j;
}

inline json comparison_json(const json& bayes, const json& norm) {
    json cmp{{"bayes", bayes}, {"norm", norm}};
    cmp["bayes_min_V_exceeds_norm"] = bayes["window_min_V"].get<double>() > norm["window_min_V"].get<double>();
    cmp["only_norm_alarms"] = norm["window_alarm"].get<bool>() && !bayes["window_alarm"].get<bool>();
    cmp["both_reach_goal"] = bayes["goal_satisfied"].get<bool>() && norm["goal_satisfied"].get<bool>();
    return cmp;
}

struct ScenarioOutcome {
    json report;
    bool any_infeasible = false;
};

/// Runs the whole pipeline and writes every artifact plus report.json into `out`.
/// With `force_compare`, the L2 attack is run alongside the min-V attack.
inline ScenarioOutcome run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out,
                                    bool force_compare = false) {
    const auto src = load_series(cfg);
    const auto ctx = scenario_context(cfg, src.series);
    const auto clean = evaluate_window(ctx, ctx.clean_window);
    const auto clean_fs = decision_forecast(ctx, clean.final_state);
    const auto goal = resolve_goal(cfg.goal, clean.decision);

    write_csv_file(out / "series.csv", write_series_csv, src.series);
    write_csv_file(out / "forecast.csv", write_forecast_csv, clean_fs);
    write_csv_file(out / "monitor_clean.csv", write_monitor_csv, full_trace(ctx, clean.trace));
    write_csv_file(out / "decision.csv", write_decision_csv, clean.table);

    ScenarioOutcome res;
    json& rep = res.report;
    rep["scenario"] = cfg.name;
    rep["master_seed"] = cfg.master_seed;
    rep["simulation_seed"] = src.simulation_seed ? json(*src.simulation_seed) : json(nullptr);
    rep["alpha"] = cfg.window.alpha;
    rep["window"] = {cfg.window.first(), cfg.window.alpha};
    rep["alarm_threshold_tau"] = cfg.monitor.alarm_threshold_tau;
    rep["goal_decisions"] = goal.targets.size() <= 8 ? json(goal.targets)
                                                     : json{{"at_most", goal.targets.back()}};
    rep["clean"] = decision_summary(ctx, clean, clean_fs);

    const auto bayes = run_scenario_attack(AttackKind::bayes, cfg, ctx, goal);
    rep["attack"] = write_attack_artifacts(out, AttackKind::bayes, ctx, bayes, clean);
    res.any_infeasible = !bayes.feasible;

    if (cfg.compare_with_norm || force_compare) {
        const auto norm = run_scenario_attack(AttackKind::norm, cfg, ctx, goal);
        const auto nj = write_attack_artifacts(out / "norm", AttackKind::norm, ctx, norm, clean);
        res.any_infeasible = res.any_infeasible || !norm.feasible;
        const auto cmp = comparison_json(rep["attack"], nj);
        write_text_file(out / "comparison.json", cmp.dump(2) + "\n");
        rep["comparison"] = cmp;
    }
    write_text_file(out / "report.json", rep.dump(2) + "\n");
    return res;
}

}  // namespace dynattack
