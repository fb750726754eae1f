#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynattack/error.hpp"
#include "dynattack/forecast.hpp"

namespace dynattack {

/// Place an ad costing C that earns R per viewer at forecast step target_step.
struct AdPlacementProblem {
    double cost_C = 100.0;
    double reward_R = 0.95;
    std::size_t target_step = 1;

    void validate() const {
        if (!(cost_C > 0.0)) throw ConfigError("ad problem: C must be > 0");
        if (!(reward_R > 0.0)) throw ConfigError("ad problem: R must be > 0");
        if (target_step < 1) throw ConfigError("ad problem: target_step must be >= 1");
    }
    double threshold() const { return cost_C / reward_R; }
};

/// Newsvendor stocking decision for the summed demand over weekend_steps.
struct InventoryProblem {
    double price_p = 2.0;
    double unit_cost_c = 1.0;
    double resale_s = 0.0;
    std::vector<std::size_t> weekend_steps{5, 6, 7};
    std::optional<std::int64_t> d_max;  // defaults to 3 x mean weekend demand

    void validate() const {
        if (!(price_p > unit_cost_c && unit_cost_c > resale_s && resale_s >= 0.0))
            throw ConfigError("inventory problem: need p > c > s >= 0");
        if (weekend_steps.empty()) throw ConfigError("inventory problem: weekend_steps is empty");
        for (auto s : weekend_steps) {
            if (s < 1) throw ConfigError("inventory problem: weekend steps must be >= 1");
        }
        if (d_max && *d_max < 1) throw ConfigError("inventory problem: d_max must be >= 1");
    }
    std::size_t last_step() const { return *std::max_element(weekend_steps.begin(), weekend_steps.end()); }
};

using DecisionProblem = std::variant<AdPlacementProblem, InventoryProblem>;

/// Psi(d | D_alpha) for each decision, in decision order. Decisions are
/// identified by their position; labels are for display.
struct ExpectedUtilityTable {
    std::vector<std::string> decisions;
    std::vector<double> psi;
    std::size_t argmax = 0;
};

/// First index attaining max(psi), so ties go to the earliest decision.
inline std::size_t optimal_decision(const ExpectedUtilityTable& table) {
    if (table.psi.empty()) throw InputError("optimal_decision: empty table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.psi.size(); ++i) {
        if (table.psi[i] > table.psi[best]) best = i;
    }
    return best;
}

inline constexpr std::size_t kSkip = 0;
inline constexpr std::size_t kPlace = 1;

inline ExpectedUtilityTable ad_expected_utilities(const AdPlacementProblem& problem, double predictive_mean) {
    problem.validate();
    ExpectedUtilityTable t;
    t.decisions = {"skip", "place"};
    t.psi = {0.0, problem.reward_R * predictive_mean - problem.cost_C};
    t.argmax = optimal_decision(t);
    return t;
}

inline ExpectedUtilityTable ad_expected_utilities(const AdPlacementProblem& problem, const ForecastSamples& fs) {
    if (problem.target_step > fs.horizon) throw InputError("ad problem: target step beyond forecast horizon");
    return ad_expected_utilities(problem, predictive_mean(fs, problem.target_step));
}

/// Summed demand over the weekend steps, one value per sample path.
inline std::vector<Count> weekend_demand(const InventoryProblem& problem, const ForecastSamples& fs) {
    if (problem.last_step() > fs.horizon) throw InputError("inventory problem: forecast horizon too short");
    std::vector<Count> yw(fs.n_paths, 0);
    for (std::size_t p = 0; p < fs.n_paths; ++p) {
        for (auto s : problem.weekend_steps) yw[p] += fs.at(p, s);
    }
    return yw;
}

inline std::int64_t default_d_max(const std::vector<Count>& yw) {
    double mean = 0.0;
    for (Count y : yw) mean += static_cast<double>(y);
    mean /= static_cast<double>(std::max<std::size_t>(1, yw.size()));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(3.0 * mean)));
}

/// Psi(d) = (p - c) sum_{q<d} P(y_w > q) + (s - c) sum_{q<d} P(y_w <= q), for d = 0..d_max,
/// with probabilities taken from the empirical distribution of the sample paths.
inline ExpectedUtilityTable inventory_expected_utilities(const InventoryProblem& problem, const ForecastSamples& fs) {
    problem.validate();
    const auto yw = weekend_demand(problem, fs);
    const std::int64_t d_max = problem.d_max.value_or(default_d_max(yw));
    const auto n = static_cast<double>(yw.size());

    // at_most[q] = #{y_w <= q} for q = 0..d_max-1
    std::vector<std::int64_t> at_most(static_cast<std::size_t>(d_max), 0);
    for (Count y : yw) {
        if (y < d_max) ++at_most[static_cast<std::size_t>(y)];
    }
    for (std::size_t q = 1; q < at_most.size(); ++q) at_most[q] += at_most[q - 1];

    ExpectedUtilityTable t;
    t.decisions.reserve(static_cast<std::size_t>(d_max) + 1);
    t.psi.reserve(static_cast<std::size_t>(d_max) + 1);
    double sum_exceed = 0.0;
    double sum_below = 0.0;
    for (std::int64_t d = 0; d <= d_max; ++d) {
        t.decisions.push_back(std::to_string(d));
        t.psi.push_back((problem.price_p - problem.unit_cost_c) * sum_exceed +
                        (problem.resale_s - problem.unit_cost_c) * sum_below);
        if (d < d_max) {
            const double below = static_cast<double>(at_most[static_cast<std::size_t>(d)]) / n;
            sum_below += below;
            sum_exceed += 1.0 - below;
        }
    }
    t.argmax = optimal_decision(t);
    return t;
}

inline ExpectedUtilityTable expected_utilities(const AdPlacementProblem& p, const ForecastSamples& fs) {
    return ad_expected_utilities(p, fs);
}

inline ExpectedUtilityTable expected_utilities(const InventoryProblem& p, const ForecastSamples& fs) {
    return inventory_expected_utilities(p, fs);
}

inline ExpectedUtilityTable expected_utilities(const DecisionProblem& problem, const ForecastSamples& fs) {
    return std::visit([&](const auto& p) { return expected_utilities(p, fs); }, problem);
}

/// Forecast steps whose draws the problem reads (1-based steps mapped to a 0-based mask).
inline std::vector<bool> required_steps(const DecisionProblem& problem) {
    std::vector<bool> mask;
    if (const auto* ad = std::get_if<AdPlacementProblem>(&problem)) {
        mask.assign(ad->target_step, false);
        mask[ad->target_step - 1] = true;
        return mask;
    }
    const auto& inv = std::get<InventoryProblem>(problem);
    mask.assign(inv.last_step(), false);
    for (auto s : inv.weekend_steps) mask[s - 1] = true;
    return mask;
}

/// Forecast horizon the problem needs.
inline std::size_t required_horizon(const DecisionProblem& problem) {
    if (const auto* ad = std::get_if<AdPlacementProblem>(&problem)) return ad->target_step;
    return std::get<InventoryProblem>(problem).last_step();
}

}  // namespace dynattack
