#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bess/backtest.hpp"
#include "bess/controller.hpp"
#include "bess/errors.hpp"
#include "bess/hp_search.hpp"
#include "bess/io.hpp"
#include "bess/kernel_predictor.hpp"
#include "bess/lp/solver.hpp"
#include "bess/synth.hpp"
#include "bess/tariff.hpp"

namespace bess {

struct DataConfig {
    std::string demand;
    std::string prices;
    /// First local date of the test period.
    std::optional<std::chrono::sys_days> test_start;
    std::optional<int> step_minutes;
};

struct SynthConfig {
    SynthDemandOptions demand;
    SynthPriceOptions prices;
};

/// Every module's parameters in one tree. Defaults reproduce the reference
/// experiment; a file only needs the keys it changes.
struct RunConfig {
    DataConfig data;
    BatteryTemplate battery;
    /// Rating for single-scenario commands.
    double p_max_kw = 500.0;
    KernelConfig kernel;
    TariffSchedule tariff;
    std::vector<double> sizes_kw{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    SearchSpec search;
    ControllerOptions controller;
    std::size_t soc_bins = 100;
    lp::Method method = lp::Method::Automatic;
    SynthConfig synth;

    void validate() const {
        battery.for_power(p_max_kw);
        kernel.validate();
        tariff.validate(data.step_minutes.value_or(5));
        search.validate();
        if (sizes_kw.empty()) throw ConfigError("config: sweep.sizes_kw is empty");
        for (double s : sizes_kw) {
            if (!(s >= 0.0)) throw ConfigError("config: sweep.sizes_kw values must be >= 0");
        }
        if (soc_bins < 2) throw ConfigError("config: controller.soc_bins must be >= 2");
        if (synth.demand.days < 1 || synth.prices.days < 1) throw ConfigError("config: synth.days must be >= 1");
    }

    ScenarioConfig scenario(unsigned jobs) const {
        ScenarioConfig s;
        s.sizes_kw = sizes_kw;
        s.battery = battery;
        s.kernel = kernel;
        s.tariff = tariff;
        s.soc_bins = soc_bins;
        s.controller = controller;
        s.method = method;
        s.jobs = jobs;
        return s;
    }
};

namespace detail {

inline std::string setting_name(const std::string& section, const std::string& key) { return section + "." + key; }

inline double parse_number(const std::string& name, const std::string& text) {
    double v = 0.0;
    if (!io::parse_double(text, v)) throw ConfigError("config: " + name + " expects a number, got '" + text + "'");
    return v;
}

inline std::size_t parse_count(const std::string& name, const std::string& text) {
    const double v = parse_number(name, text);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ConfigError("config: " + name + " expects a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& name, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("config: " + name + " expects true or false, got '" + text + "'");
}

inline std::vector<double> parse_number_list(const std::string& name, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(name, std::string(io::trim(item))));
    if (out.empty()) throw ConfigError("config: " + name + " is an empty list");
    return out;
}

inline std::vector<std::size_t> parse_count_list(const std::string& name, const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : parse_number_list(name, text)) out.push_back(parse_count(name, io::format_double(v)));
    return out;
}

inline std::chrono::sys_days parse_date(const std::string& name, const std::string& text) {
    const auto ts = parse_timestamp(text + "T00:00");
    if (!ts) throw ConfigError("config: " + name + " expects a date YYYY-MM-DD, got '" + text + "'");
    return std::chrono::floor<std::chrono::days>(ts->instant);
}

} // namespace detail

inline lp::Method parse_lp_method(const std::string& text) {
    if (text == "auto") return lp::Method::Automatic;
    if (text == "simplex") return lp::Method::Simplex;
    if (text == "interior-point") return lp::Method::InteriorPoint;
    throw ConfigError("config: lp.method must be auto, simplex or interior-point, got '" + text + "'");
}

/// Apply `section.key = value` to the config. Unknown names are rejected.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string name = setting_name(section, key);
    const std::string value(io::trim(raw));
    auto num = [&] { return parse_number(name, value); };
    auto count = [&] { return parse_count(name, value); };

    if (section == "data") {
        if (key == "demand") return void(c.data.demand = value);
        if (key == "prices") return void(c.data.prices = value);
        if (key == "test_start") return void(c.data.test_start = parse_date(name, value));
        if (key == "step_minutes") return void(c.data.step_minutes = static_cast<int>(count()));
    } else if (section == "battery") {
        if (key == "p_max_kw") return void(c.p_max_kw = num());
        if (key == "duration_hours") return void(c.battery.duration_hours = num());
        if (key == "e_min_fraction") return void(c.battery.e_min_fraction = num());
        if (key == "e0_fraction") return void(c.battery.e0_fraction = num());
        if (key == "eta") return void(c.battery.eta = num());
        if (key == "c_deg") return void(c.battery.c_deg = num());
        if (key == "cycle_limit_per_day") {
            if (value == "none") return void(c.battery.cycle_limit_per_day.reset());
            return void(c.battery.cycle_limit_per_day = num());
        }
    } else if (section == "kernel") {
        if (key == "lookback") return void(c.kernel.lookback = count());
        if (key == "sigma") return void(c.kernel.sigma = num());
        if (key == "k") return void(c.kernel.k = count());
        if (key == "alpha") return void(c.kernel.alpha = num());
    } else if (section == "tariff") {
        if (key == "kappa_summer") return void(c.tariff.kappa_summer = num());
        if (key == "kappa_nonsummer") return void(c.tariff.kappa_nonsummer = num());
        if (key == "customer_charge") return void(c.tariff.customer_charge = num());
        if (key == "interval_minutes") return void(c.tariff.metric_interval_minutes = static_cast<int>(count()));
        if (key == "consecutive_intervals") {
            return void(c.tariff.metric_consecutive_intervals = static_cast<int>(count()));
        }
        if (key == "metric") {
            if (value == "interval-average") return void(c.tariff.metric = PeakMetric::IntervalAverage);
            if (value == "per-step") return void(c.tariff.metric = PeakMetric::PerStep);
            throw ConfigError("config: " + name + " must be interval-average or per-step");
        }
    } else if (section == "sweep") {
        if (key == "sizes_kw") return void(c.sizes_kw = parse_number_list(name, value));
    } else if (section == "search") {
        if (key == "lookback_grid") return void(c.search.lookback_grid = parse_count_list(name, value));
        if (key == "sigma_grid") return void(c.search.sigma_grid = parse_number_list(name, value));
        if (key == "k_grid") return void(c.search.k_grid = parse_count_list(name, value));
        if (key == "refine") return void(c.search.refine = parse_bool(name, value));
        if (key == "refine_points") return void(c.search.refine_points = count());
        if (key == "cycle_weight") return void(c.search.cycle_weight = num());
    } else if (section == "controller") {
        if (key == "soc_bins") return void(c.soc_bins = count());
        if (key == "discharge_cap") {
            if (value == "stage-one") return void(c.controller.discharge_cap = DischargeCap::StageOneOnly);
            if (value == "above-reserve") return void(c.controller.discharge_cap = DischargeCap::AboveReserve);
            throw ConfigError("config: " + name + " must be stage-one or above-reserve");
        }
    } else if (section == "lp") {
        if (key == "method") return void(c.method = parse_lp_method(value));
    } else if (section == "synth") {
        if (key == "start") {
            c.synth.demand.start = parse_date(name, value);
            c.synth.prices.start = c.synth.demand.start;
            return;
        }
        if (key == "days") {
            c.synth.demand.days = static_cast<int>(count());
            c.synth.prices.days = c.synth.demand.days;
            return;
        }
        if (key == "step_minutes") return void(c.synth.demand.step_minutes = static_cast<int>(count()));
        if (key == "mean_kw") return void(c.synth.demand.mean_kw = num());
        if (key == "std_kw") return void(c.synth.demand.std_kw = num());
        if (key == "noise") return void(c.synth.demand.noise = num());
        if (key == "spikes_per_day") return void(c.synth.demand.spikes_per_day = num());
        if (key == "spike_height") return void(c.synth.demand.spike_height = num());
        if (key == "seasonal_amplitude") return void(c.synth.demand.seasonal_amplitude = num());
        if (key == "demand_seed") return void(c.synth.demand.seed = count());
        if (key == "price_base") return void(c.synth.prices.base = num());
        if (key == "price_daily_swing") return void(c.synth.prices.daily_swing = num());
        if (key == "price_noise") return void(c.synth.prices.noise = num());
        if (key == "price_spikes_per_day") return void(c.synth.prices.spikes_per_day = num());
        if (key == "price_seed") return void(c.synth.prices.seed = count());
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
    throw ConfigError("config: unknown key " + name);
}

/// Parse INI text on top of `base`. Relative data paths are resolved
/// against `base_dir` when it is given.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}, const std::filesystem::path& base_dir = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' is outside any section");
        for (const auto& [key, node] : body) {
            if (!node.empty()) throw ConfigError("config: nested key under " + section + "." + key);
            apply_setting(base, section, key, node.data());
        }
    }
    if (!base_dir.empty()) {
        for (auto* p : {&base.data.demand, &base.data.prices}) {
            if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base_dir / *p).lexically_normal().string();
        }
    }
    base.validate();
    return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("config file not found: " + path.string());
    try {
        return parse_config(io::read_file(path), {}, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Apply a command-line override of the form `section.key=value`.
inline void apply_override(RunConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    apply_setting(c, std::string(io::trim(assignment.substr(0, dot))),
                  std::string(io::trim(assignment.substr(dot + 1, eq - dot - 1))), assignment.substr(eq + 1));
}

/// Kernel settings as a config fragment that this parser accepts.
inline std::string kernel_to_ini(const KernelConfig& k) {
    std::ostringstream out;
    out << "[kernel]\n"
        << "lookback = " << k.lookback << "\n"
        << "sigma = " << io::format_double(k.sigma) << "\n"
        << "k = " << k.k << "\n"
        << "alpha = " << io::format_double(k.alpha) << "\n";
    return out.str();
}

} // namespace bess
