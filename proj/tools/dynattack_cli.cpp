#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynattack/scenario.hpp"

namespace fs = std::filesystem;
namespace da = dynattack;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;

struct Options {
    std::string config;
    std::string scenario;
    std::string series;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
};

da::ScenarioConfig load(const Options& o) {
    if (!o.config.empty() && !o.scenario.empty()) throw da::ConfigError("use either --config or --scenario, not both");
    da::ScenarioConfig cfg;
    if (!o.config.empty()) {
        cfg = da::load_scenario(o.config);
    } else if (!o.scenario.empty()) {
        cfg = da::builtin_scenario(o.scenario);
    } else {
        throw da::ConfigError("a scenario is required: pass --config <file.json> or --scenario <name>");
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (!o.series.empty()) {
        cfg.series.kind = da::SeriesSource::Kind::csv;
        cfg.series.path = o.series;
    }
    return cfg;
}

struct Clean {
    da::ScenarioConfig cfg;
    da::ScenarioSeries src;
    da::AttackContext ctx;
    da::WindowEvaluation eval;
};

Clean clean_run(const Options& o) {
    Clean c{load(o), {}, {}, {}};
    c.src = da::load_series(c.cfg);
    c.ctx = da::scenario_context(c.cfg, c.src.series);
    c.eval = da::evaluate_window(c.ctx, c.ctx.clean_window);
    return c;
}

int cmd_simulate(const Options& o) {
    const auto cfg = load(o);
    const auto src = da::load_series(cfg);
    da::write_csv_file(fs::path(o.out) / "series.csv", da::write_series_csv, src.series);
    std::cout << "wrote " << src.series.size() << " observations";
    if (src.simulation_seed) std::cout << " (simulation seed " << *src.simulation_seed << ")";
    std::cout << "\n";
    return kOk;
}

int cmd_forecast(const Options& o) {
    const auto c = clean_run(o);
    const auto fc = da::decision_forecast(c.ctx, c.eval.final_state);
    da::write_csv_file(fs::path(o.out) / "forecast.csv", da::write_forecast_csv, fc);
    std::cout << "forecast from t=" << fc.origin << ": " << fc.n_paths << " paths x " << fc.horizon << " steps\n";
    return kOk;
}

int cmd_monitor(const Options& o) {
    const auto c = clean_run(o);
    const auto trace = da::full_trace(c.ctx, c.eval.trace);
    da::write_csv_file(fs::path(o.out) / "monitor_clean.csv", da::write_monitor_csv, trace);
    std::size_t alarms = 0;
    for (bool a : trace.alarms) alarms += a ? 1 : 0;
    std::cout << "window min V " << c.eval.min_v << ", alarms in series " << alarms << "\n";
    return kOk;
}

int cmd_decide(const Options& o) {
    const auto c = clean_run(o);
    da::write_csv_file(fs::path(o.out) / "decision.csv", da::write_decision_csv, c.eval.table);
    std::cout << "decision " << c.eval.table.decisions[c.eval.decision] << "\n";
    return kOk;
}

int cmd_attack(const Options& o, bool compare) {
    const auto c = clean_run(o);
    const auto goal = da::resolve_goal(c.cfg.goal, c.eval.decision);
    const fs::path out(o.out);
    const auto bayes = da::run_scenario_attack(da::AttackKind::bayes, c.cfg, c.ctx, goal);
    auto summary = da::write_attack_artifacts(out, da::AttackKind::bayes, c.ctx, bayes, c.eval);
    bool infeasible = !bayes.feasible;
    if (compare) {
        const auto norm = da::run_scenario_attack(da::AttackKind::norm, c.cfg, c.ctx, goal);
        const auto nj = da::write_attack_artifacts(out / "norm", da::AttackKind::norm, c.ctx, norm, c.eval);
        infeasible = infeasible || !norm.feasible;
        const auto cmp = da::comparison_json(summary, nj);
        da::write_text_file(out / "comparison.json", cmp.dump(2) + "\n");
        summary = cmp;
    }
    std::cout << summary.dump(2) << "\n";
    return infeasible ? kInfeasible : kOk;
}

int cmd_run_scenario(const Options& o) {
    const auto cfg = load(o);
    const auto res = da::run_scenario(cfg, o.out);
    std::cout << res.report.dump(2) << "\n";
    return res.any_infeasible ? kInfeasible : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-flipping attacks on count time-series forecasts, with Bayes-factor monitoring"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Scenario config (JSON)");
        sub->add_option("--scenario", o.scenario, "Built-in scenario: ad_company or inventory");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Master seed (overrides the config)");
        sub->add_option("--series", o.series, "Clean series CSV (t,y) replacing the configured source");
    };
    auto* simulate = app.add_subcommand("simulate", "Simulate (or load) the clean series");
    auto* forecast = app.add_subcommand("forecast", "Filter to alpha and write forecast sample paths");
    auto* monitor = app.add_subcommand("monitor", "Bayes-factor monitor over the clean series");
    auto* decide = app.add_subcommand("decide", "Expected utilities and the defender's decision");
    auto* attack = app.add_subcommand("attack", "Min-V attack on the configured window");
    auto* compare = app.add_subcommand("compare", "Min-V attack versus minimal-L2 attack");
    auto* run = app.add_subcommand("run-scenario", "Whole pipeline with report.json");
    for (auto* s : {simulate, forecast, monitor, decide, attack, compare, run}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(o);
        if (forecast->parsed()) return cmd_forecast(o);
        if (monitor->parsed()) return cmd_monitor(o);
        if (decide->parsed()) return cmd_decide(o);
        if (attack->parsed()) return cmd_attack(o, false);
        if (compare->parsed()) return cmd_attack(o, true);
        if (run->parsed()) return cmd_run_scenario(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
