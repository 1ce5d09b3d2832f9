#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bess/backtest.hpp"
#include "bess/controller.hpp"
#include "bess/io.hpp"
#include "bess/tariff.hpp"
#include "bess/time_series.hpp"

namespace bess {

namespace detail {

inline std::string month_text(std::chrono::year_month ym) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", static_cast<int>(ym.year()), static_cast<unsigned>(ym.month()));
    return buf;
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline std::string cents_text(std::int64_t cents) {
    const bool negative = cents < 0;
    const auto mag = static_cast<unsigned long long>(negative ? -cents : cents);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%llu.%02llu", negative ? "-" : "", mag / 100, mag % 100);
    return buf;
}

} // namespace detail

inline nlohmann::json bill_to_json(const BillingResult& bill) {
    auto months = nlohmann::json::array();
    for (const auto& m : bill.months) {
        months.push_back({{"month", detail::month_text(m.month)},
                          {"season", std::string(to_string(m.season))},
                          {"billed_peak_kw", m.billed_peak_kw},
                          {"demand_charge", m.demand_charge},
                          {"energy_charge", m.energy_charge},
                          {"degradation", m.degradation},
                          {"customer_charge", m.customer},
                          {"total", m.total}});
    }
    return {{"total", bill.total()}, {"months", months}};
}

inline nlohmann::json outcome_to_json(const StrategyOutcome& o) {
    return {{"total_cost", o.total_dollars()},
            {"savings", o.savings_dollars()},
            {"savings_percent", 100.0 * o.savings_fraction},
            {"annual_cycles", o.annual_cycles}};
}

inline nlohmann::json report_to_json(const BacktestReport& report) {
    auto scenarios = nlohmann::json::array();
    for (const auto& s : report.scenarios) {
        auto peaks = nlohmann::json::array();
        for (const auto& p : s.peaks) {
            peaks.push_back({{"month", detail::month_text(p.month)},
                             {"no_storage_kw", p.no_storage_kw},
                             {"hindsight_kw", p.hindsight_kw},
                             {"controller_kw", p.controller_kw}});
        }
        scenarios.push_back({{"p_max_kw", s.p_max_kw},
                             {"e_max_kwh", s.e_max_kwh},
                             {"no_storage_cost", s.no_storage_dollars()},
                             {"hindsight", outcome_to_json(s.hindsight)},
                             {"controller", outcome_to_json(s.controller)},
                             {"capture_ratio", detail::finite_or_null(s.capture_ratio)},
                             {"monthly_peaks", peaks}});
    }
    return {{"scenarios", scenarios}};
}

/// One row per battery size, amounts in dollars with exact cents.
inline std::string report_to_csv(const BacktestReport& report) {
    std::ostringstream out;
    out << "p_max_kw,e_max_kwh,no_storage_cost,hindsight_cost,hindsight_savings,hindsight_savings_pct,"
           "hindsight_cycles,controller_cost,controller_savings,controller_savings_pct,controller_cycles,"
           "capture_ratio\n";
    for (const auto& s : report.scenarios) {
        out << io::format_double(s.p_max_kw) << ',' << io::format_double(s.e_max_kwh) << ','
            << detail::cents_text(s.no_storage_cents) << ',' << detail::cents_text(s.hindsight.total_cents) << ','
            << detail::cents_text(s.hindsight.savings_cents) << ','
            << io::format_double(100.0 * s.hindsight.savings_fraction) << ','
            << io::format_double(s.hindsight.annual_cycles) << ','
            << detail::cents_text(s.controller.total_cents) << ','
            << detail::cents_text(s.controller.savings_cents) << ','
            << io::format_double(100.0 * s.controller.savings_fraction) << ','
            << io::format_double(s.controller.annual_cycles) << ','
            << (std::isfinite(s.capture_ratio) ? io::format_double(s.capture_ratio) : std::string()) << '\n';
    }
    return out.str();
}

/// Monthly billed peaks for every scenario, long format.
inline std::string peaks_to_csv(const BacktestReport& report) {
    std::ostringstream out;
    out << "p_max_kw,month,no_storage_kw,hindsight_kw,controller_kw\n";
    for (const auto& s : report.scenarios) {
        for (const auto& p : s.peaks) {
            out << io::format_double(s.p_max_kw) << ',' << detail::month_text(p.month) << ','
                << io::format_double(p.no_storage_kw) << ',' << io::format_double(p.hindsight_kw) << ','
                << io::format_double(p.controller_kw) << '\n';
        }
    }
    return out.str();
}

/// Per-step controller trajectory.
inline std::string schedule_to_csv(const TimeAxis& axis, std::span<const double> demand, const ControllerRun& run) {
    const auto& s = run.schedule;
    std::ostringstream out;
    out << "timestamp,demand_kw,d_kw,q_kw,soc_kwh,net_kw,p_running_kw\n";
    for (std::size_t t = 0; t < demand.size(); ++t) {
        out << format_timestamp(axis.instant(t), axis.utc_offset) << ',' << io::format_double(demand[t]) << ','
            << io::format_double(s.discharge[t]) << ',' << io::format_double(s.charge[t]) << ','
            << io::format_double(s.soc[t]) << ',' << io::format_double(s.net_demand[t]) << ','
            << io::format_double(run.p_running[t]) << '\n';
    }
    return out.str();
}

/// Regular time-stamped numeric columns read from a CSV with a header row.
struct ColumnFile {
    TimeAxis axis;
    std::map<std::string, std::vector<double>, std::less<>> columns;

    bool has(std::string_view name) const { return columns.find(name) != columns.end(); }
    const std::vector<double>& at(std::string_view name) const { return columns.find(name)->second; }
};

/// Read a CSV whose header names a `timestamp` column plus the `required`
/// columns; `optional` columns are read when present, others are ignored.
/// Rows must be strictly regular.
inline ColumnFile read_column_csv(const std::filesystem::path& path, const std::vector<std::string>& required,
                                  const std::vector<std::string>& optional = {}) {
    if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
    const std::string text = io::read_file(path);
    const std::string source = path.string();
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto split = [](std::string_view row) {
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = row.find(',', start);
            cells.push_back(io::trim(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return cells;
    };
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        for (auto cell : split(io::trim(line))) header.emplace_back(cell);
        break;
    }
    auto find = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };
    const auto col_time = find("timestamp");
    if (col_time < 0) throw ParseError(source, line_no, "header needs a 'timestamp' column");
    std::vector<std::pair<std::string, std::size_t>> wanted;
    for (const auto& name : required) {
        const auto c = find(name);
        if (c < 0) throw ParseError(source, line_no, "header has no '" + name + "' column");
        wanted.emplace_back(name, static_cast<std::size_t>(c));
    }
    for (const auto& name : optional) {
        const auto c = find(name);
        if (c >= 0) wanted.emplace_back(name, static_cast<std::size_t>(c));
    }

    ColumnFile out;
    for (const auto& [name, c] : wanted) out.columns[name];
    std::vector<sys_seconds> stamps;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = io::trim(line);
        if (row.empty()) continue;
        const auto cells = split(row);
        if (cells.size() != header.size()) {
            throw ParseError(source, line_no, "expected " + std::to_string(header.size()) + " fields");
        }
        const auto ts = parse_timestamp(cells[static_cast<std::size_t>(col_time)]);
        if (!ts) throw ParseError(source, line_no, "malformed timestamp");
        if (stamps.empty()) out.axis.utc_offset = ts->utc_offset;
        for (const auto& [name, c] : wanted) {
            double v = 0.0;
            if (!io::parse_double(cells[c], v)) throw ParseError(source, line_no, "malformed " + name);
            out.columns[name].push_back(v);
        }
        stamps.push_back(ts->instant);
    }
    if (stamps.size() < 2) throw DataError(source + ": at least two rows are required");
    const auto step = stamps[1] - stamps[0];
    if (step.count() <= 0 || step.count() % 60 != 0) throw StructuralError(source + ": irregular time step");
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        if (stamps[i] - stamps[i - 1] != step) {
            throw StructuralError(source + ": row " + std::to_string(i + 1) + " breaks the regular time step");
        }
    }
    out.axis.start = stamps.front();
    out.axis.step_minutes = static_cast<int>(step.count() / 60);
    return out;
}

/// A stored schedule read back for billing.
struct ScheduleFile {
    TimeAxis axis;
    std::vector<double> net_demand;
    /// Empty when the file has no `d_kw` column.
    std::vector<double> discharge;
};

/// Schedule CSV with `timestamp` and `net_kw`; `d_kw` feeds the degradation cost.
inline ScheduleFile read_schedule_csv(const std::filesystem::path& path) {
    auto file = read_column_csv(path, {"net_kw"}, {"d_kw"});
    ScheduleFile out;
    out.axis = file.axis;
    out.net_demand = std::move(file.columns["net_kw"]);
    if (file.has("d_kw")) out.discharge = std::move(file.columns["d_kw"]);
    return out;
}

/// Hindsight targets as written by the `hindsight --mode targets` command.
inline HindsightTargets read_targets_csv(const std::filesystem::path& path) {
    auto file = read_column_csv(path, {"e_hist_kwh", "p_hist_kw"}, {"net_kw"});
    HindsightTargets t;
    t.axis = file.axis;
    t.e_hist = std::move(file.columns["e_hist_kwh"]);
    t.p_hist = std::move(file.columns["p_hist_kw"]);
    if (file.has("net_kw")) t.net_demand = std::move(file.columns["net_kw"]);
    return t;
}

} // namespace bess
