#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynattack/annealing.hpp"
#include "dynattack/decision.hpp"
#include "dynattack/error.hpp"
#include "dynattack/forecast.hpp"
#include "dynattack/model.hpp"
#include "dynattack/monitor.hpp"

namespace dynattack {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal for a double ("%.17g").
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- CSV

inline TimeSeries parse_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("series csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,y") throw InputError("series csv: expected header 't,y', got '" + line + "'");
    TimeSeries ts;
    bool first = true;
    std::int64_t expected = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError("series csv: line " + std::to_string(lineno) + " has no comma");
        std::int64_t t = 0;
        long long y = 0;
        try {
            std::size_t pos = 0;
            t = std::stoll(line.substr(0, comma), &pos);
            if (pos != comma) throw std::invalid_argument("t");
            const auto rest = line.substr(comma + 1);
            y = std::stoll(rest, &pos);
            if (pos != rest.size()) throw std::invalid_argument("y");
        } catch (const std::logic_error&) {
            throw InputError("series csv: line " + std::to_string(lineno) + " is not 't,y' integers");
        }
        if (first) {
            ts.start_index = t;
            expected = t;
            first = false;
        }
        if (t != expected) throw InputError("series csv: time index must increase by 1 at line " + std::to_string(lineno));
        if (y < 0) throw InputError("series csv: negative count at line " + std::to_string(lineno));
        ts.counts.push_back(y);
        ++expected;
    }
    return ts;
}

inline TimeSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_series_csv(in);
}

inline void write_series_csv(std::ostream& out, const TimeSeries& ts) {
    out << "t,y\n";
    for (std::size_t i = 0; i < ts.size(); ++i) out << ts.start_index + static_cast<std::int64_t>(i) << ',' << ts.counts[i] << '\n';
}

inline void write_monitor_csv(std::ostream& out, const MonitorTrace& tr) {
    out << "t,H,V,alarm\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        out << tr.times[i] << ',' << format_double(tr.H[i]) << ',' << format_double(tr.V[i]) << ','
            << (tr.alarms[i] ? 1 : 0) << '\n';
    }
}

inline MonitorTrace parse_monitor_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "t,H,V,alarm") throw InputError("monitor csv: expected header 't,H,V,alarm'");
    MonitorTrace tr;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string t, h, v, a;
        std::getline(row, t, ',');
        std::getline(row, h, ',');
        std::getline(row, v, ',');
        std::getline(row, a, ',');
        tr.times.push_back(std::stoll(t));
        tr.H.push_back(std::stod(h));
        tr.V.push_back(std::stod(v));
        tr.alarms.push_back(a == "1");
    }
    return tr;
}

inline void write_forecast_csv(std::ostream& out, const ForecastSamples& fs) {
    out << "path_id,step,y\n";
    for (std::size_t p = 0; p < fs.n_paths; ++p) {
        for (std::size_t k = 1; k <= fs.horizon; ++k) out << p << ',' << k << ',' << fs.at(p, k) << '\n';
    }
}

inline void write_decision_csv(std::ostream& out, const ExpectedUtilityTable& t) {
    out << "decision,psi\n";
    for (std::size_t i = 0; i < t.psi.size(); ++i) out << t.decisions[i] << ',' << format_double(t.psi[i]) << '\n';
}

inline void write_trace_csv(std::ostream& out, const AttackResult& r) {
    out << "iter,best_S\n";
    for (const auto& p : r.best_trace) out << p.iteration << ',' << format_double(p.best) << '\n';
}

// ---------------------------------------------------------------- JSON

/// Non-finite values (e.g. the objective of an infeasible attack) are written as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json attack_to_json(const AttackResult& r) {
    return json{{"attacked_window", r.attacked_window},
                {"S_star", number_or_null(r.objective_S_star)},
                {"goal_satisfied", r.goal_satisfied},
                {"feasible", r.feasible},
                {"evaluations", r.evaluations}};
}

inline json spec_to_json(const ModelSpec& s) {
    json j{{"trend_order", s.trend_order}};
    j["seasonal_period"] = s.seasonal_period ? json(*s.seasonal_period) : json(nullptr);
    j["state_noise_variances"] = s.state_noise_variances;
    j["prior_mean"] = s.prior_mean;
    j["prior_variances"] = s.prior_variances;
    return j;
}

/// Missing prior fields are left empty; callers fill them with `with_default_prior`.
inline ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    try {
        s.trend_order = j.value("trend_order", 1);
        if (j.contains("seasonal_period") && !j["seasonal_period"].is_null())
            s.seasonal_period = j["seasonal_period"].get<int>();
        s.state_noise_variances = j.at("state_noise_variances").get<std::vector<double>>();
        s.prior_mean = j.value("prior_mean", std::vector<double>{});
        s.prior_variances = j.value("prior_variances", std::vector<double>{});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model spec: ") + e.what());
    }
    return s;
}

inline json read_json_file(const std::filesystem::path& path) {
    if (path.extension() == ".toml") throw ConfigError("TOML configs are not supported; use JSON: " + path.string());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Writes `text` to `path` with LF line endings, creating parent directories.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

template <typename Writer, typename Value>
void write_csv_file(const std::filesystem::path& path, Writer writer, const Value& value) {
    std::ostringstream os;
    writer(os, value);
    write_text_file(path, os.str());
}

}  // namespace dynattack
