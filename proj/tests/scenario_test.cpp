#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dynattack/scenario.hpp"

namespace da = dynattack;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dynattack_scenario_test_" + name);
    fs::remove_all(p);
    return p;
}

// A desk-sized ad problem: 41 observations, window 34..40, decide about t = 41.
da::json tiny_ad() {
    return da::json::parse(R"({
  "name": "tiny",
  "master_seed": 3,
  "model": {"trend_order": 1, "state_noise_variances": [0.001],
            "prior_mean": [2.995732273553991], "prior_variances": [0.01]},
  "series": {"source": "simulate", "length": 41},
  "decision": {"kind": "ad", "C": 100, "R": 4, "beta": 41},
  "attack": {"alpha": 40, "h": 6,
             "region": {"mode": "additive_only"},
             "goal": {"kind": "decision_equals", "decision": "place"},
             "sa": {"gamma_max": 20, "delta": 2, "iters_per_temperature": 5, "proposal": "mixed"}},
  "monitor": {"variance_inflation_k": 2, "alarm_threshold_tau": 0.1},
  "n_particles": 300,
  "n_forecast_paths": 300
})");
}

}  // namespace

TEST(ScenarioConfig, AdDefaults) {
    const auto c = da::builtin_scenario("ad_company");
    EXPECT_EQ(c.window.alpha, 500);
    EXPECT_EQ(c.window.h, 20);
    const auto& ad = std::get<da::AdPlacementProblem>(c.problem);
    EXPECT_EQ(ad.target_step, 50u);
    EXPECT_DOUBLE_EQ(ad.cost_C, 100.0);
    EXPECT_DOUBLE_EQ(ad.reward_R, 0.95);
    EXPECT_EQ(c.region.mode, da::RegionMode::additive_only);
    EXPECT_EQ(c.goal.decisions, std::vector<std::size_t>{da::kPlace});
    EXPECT_DOUBLE_EQ(c.monitor.alarm_threshold_tau, 0.1);
    EXPECT_EQ(c.n_particles, 2000u);
    ASSERT_TRUE(c.series.seed_search.has_value());
    EXPECT_EQ(c.series.seed_search->max_seeds, 50u);
}

TEST(ScenarioConfig, InventoryDefaults) {
    const auto c = da::builtin_scenario("inventory");
    EXPECT_EQ(c.window.alpha, 70);
    EXPECT_EQ(c.window.first(), 50);
    const auto& inv = std::get<da::InventoryProblem>(c.problem);
    EXPECT_EQ(inv.weekend_steps, (std::vector<std::size_t>{5, 6, 7}));
    EXPECT_EQ(c.model.seasonal_period, 7);
    EXPECT_EQ(c.goal.kind, da::GoalSpec::Kind::at_most_fraction);
    EXPECT_DOUBLE_EQ(c.goal.fraction, 0.8);
    EXPECT_TRUE(c.compare_with_norm);
}

TEST(ScenarioConfig, MergesOverridesOverDefaults) {
    const auto c = da::scenario_from_json(
        da::json::parse(R"({"name": "ad_company", "master_seed": 9, "attack": {"h": 10}})"));
    EXPECT_EQ(c.master_seed, 9u);
    EXPECT_EQ(c.window.h, 10);
    EXPECT_EQ(c.window.alpha, 500);
}

TEST(ScenarioConfig, RejectsBadValues) {
    EXPECT_THROW(da::default_scenario_json("nope"), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(da::json{{"name", "custom"}}), da::ConfigError);
    auto bad = [](const char* patch) {
        auto j = tiny_ad();
        j.merge_patch(da::json::parse(patch));
        return j;
    };
    EXPECT_THROW(da::scenario_from_json(bad(R"({"decision": {"beta": 40}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"attack": {"region": {"mode": "sideways"}}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"attack": {"goal": {"kind": "at_most_fraction"}}})")),
                 da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"attack": {"goal": {"decision": "maybe"}}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"attack": {"sa": {"delta": 1.0}}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"monitor": {"variance_inflation_k": 1.0}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"series": {"length": 40}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"attack": {"h": 41}})")), da::ConfigError);
    EXPECT_THROW(da::scenario_from_json(bad(R"({"n_particles": 0})")), da::ConfigError);
}

TEST(ResolveGoal, FractionFloors) {
    da::GoalSpec g;
    g.kind = da::GoalSpec::Kind::at_most_fraction;
    g.fraction = 0.8;
    const auto goal = da::resolve_goal(g, 146);
    EXPECT_TRUE(goal.contains(116));
    EXPECT_FALSE(goal.contains(117));
}

TEST(LoadSeries, SimulationIsSeededByMaster) {
    auto c = da::scenario_from_json(tiny_ad());
    const auto a = da::load_series(c);
    const auto b = da::load_series(c);
    EXPECT_EQ(a.series, b.series);
    EXPECT_EQ(a.series.size(), 41u);
    ASSERT_TRUE(a.simulation_seed.has_value());
    c.master_seed = 4;
    EXPECT_NE(da::load_series(c).series, a.series);
}

TEST(LoadSeries, SeedSearchCanFail) {
    auto j = tiny_ad();
    j["series"]["seed_search"] = {{"max_seeds", 2}, {"min_clean_window_v", 1e9}};
    EXPECT_THROW(da::load_series(da::scenario_from_json(j)), da::ConfigError);
}

TEST(LoadSeries, ReadsCsv) {
    const auto dir = scratch_dir("csv");
    da::TimeSeries ts;
    ts.counts.assign(41, 20);
    da::write_csv_file(dir / "s.csv", da::write_series_csv, ts);
    auto j = tiny_ad();
    j["series"] = {{"source", "csv"}, {"path", (dir / "s.csv").string()}};
    const auto src = da::load_series(da::scenario_from_json(j));
    EXPECT_EQ(src.series, ts);
    EXPECT_FALSE(src.simulation_seed.has_value());
    fs::remove_all(dir);
}

TEST(RunScenario, ArtifactsAreByteIdenticalAcrossRuns) {
    const auto cfg = da::scenario_from_json(tiny_ad());
    const auto a = scratch_dir("a");
    const auto b = scratch_dir("b");
    da::run_scenario(cfg, a, true);
    da::run_scenario(cfg, b, true);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
        ++files;
    }
    EXPECT_GE(files, 15u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(RunScenario, ReportMatchesArtifacts) {
    const auto cfg = da::scenario_from_json(tiny_ad());
    const auto dir = scratch_dir("report");
    const auto res = da::run_scenario(cfg, dir);
    const auto rep = da::read_json_file(dir / "report.json");
    EXPECT_EQ(rep, res.report);
    for (const char* f : {"series.csv", "attacked.csv", "forecast.csv", "monitor_clean.csv", "monitor_attacked.csv",
                          "decision.csv", "attack.json", "trace.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_FALSE(fs::exists(dir / "comparison.json"));

    const auto attack = da::read_json_file(dir / "attack.json");
    EXPECT_EQ(rep["attack"]["goal_satisfied"], attack["goal_satisfied"]);
    EXPECT_EQ(rep["attack"]["decision_flipped"].get<bool>(),
              attack["goal_satisfied"].get<bool>() && rep["clean"]["decision"] != rep["attack"]["decision"]);

    std::ifstream in(dir / "monitor_attacked.csv");
    const auto trace = da::parse_monitor_csv(in);
    EXPECT_EQ(trace.size(), 41u);
    EXPECT_EQ(da::alarm_between(trace, 34, 40), rep["attack"]["window_alarm"].get<bool>());
    EXPECT_DOUBLE_EQ(da::min_v_between(trace, 34, 40), rep["attack"]["window_min_V"].get<double>());

    std::ifstream sin(dir / "attacked.csv");
    const auto attacked = da::parse_series_csv(sin);
    std::ifstream cin(dir / "series.csv");
    const auto clean = da::parse_series_csv(cin);
    for (std::int64_t t = 0; t < 34; ++t) EXPECT_EQ(attacked.at(t), clean.at(t));
    for (std::size_t i = 0; i < 7; ++i)
        EXPECT_EQ(attacked.at(34 + static_cast<std::int64_t>(i)), attack["attacked_window"][i].get<da::Count>());
    fs::remove_all(dir);
}

TEST(RunScenario, VacuousGoalNeedsNoPerturbation) {
    auto j = tiny_ad();
    j["attack"]["goal"] = {{"kind", "decision_in_set"}, {"decisions", {"skip", "place"}}};
    const auto dir = scratch_dir("vacuous");
    const auto res = da::run_scenario(da::scenario_from_json(j), dir, true);
    const auto& norm = res.report["comparison"]["norm"];
    EXPECT_TRUE(norm["goal_satisfied"].get<bool>());
    EXPECT_EQ(norm["l2_distance"].get<double>(), 0.0);
    EXPECT_FALSE(res.any_infeasible);
    fs::remove_all(dir);
}

TEST(RunScenario, InfeasibleAttackIsReported) {
    auto j = tiny_ad();
    j["attack"]["region"]["per_step_cap"] = 0;
    const auto dir = scratch_dir("infeasible");
    const auto res = da::run_scenario(da::scenario_from_json(j), dir);
    EXPECT_TRUE(res.any_infeasible);
    EXPECT_FALSE(res.report["attack"]["feasible"].get<bool>());
    EXPECT_TRUE(da::read_json_file(dir / "attack.json")["S_star"].is_null());
    fs::remove_all(dir);
}
