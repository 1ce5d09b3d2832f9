#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bess/arbitrage_policy.hpp"
#include "bess/battery.hpp"
#include "bess/controller.hpp"
#include "bess/errors.hpp"
#include "bess/hindsight.hpp"
#include "bess/io.hpp"
#include "bess/kernel_predictor.hpp"
#include "bess/parallel.hpp"
#include "bess/tariff.hpp"
#include "bess/time_series.hpp"

namespace bess {

/// Battery shape shared by every size in a sweep; only the power rating varies.
struct BatteryTemplate {
    double duration_hours = 2.2;
    double e_min_fraction = 0.2;
    double e0_fraction = 0.5;
    double eta = 0.9;
    double c_deg = 0.0;
    std::optional<double> cycle_limit_per_day = 1.0;

    BatteryParams for_power(double p_max_kw) const {
        auto b = BatteryParams::from_rating(p_max_kw, duration_hours, e_min_fraction, e0_fraction, eta, c_deg);
        b.cycle_limit_per_day = cycle_limit_per_day;
        b.validate();
        return b;
    }
};

struct ScenarioConfig {
    std::vector<double> sizes_kw{500.0};
    BatteryTemplate battery;
    KernelConfig kernel;
    TariffSchedule tariff;
    std::size_t soc_bins = 100;
    ControllerOptions controller;
    lp::Method method = lp::Method::Automatic;
    unsigned jobs = 1;

    void validate(int step_minutes) const {
        if (sizes_kw.empty()) throw ConfigError("scenario: at least one battery size is required");
        for (double s : sizes_kw) {
            if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("scenario: battery sizes must be finite and >= 0");
        }
        kernel.validate();
        tariff.validate(step_minutes);
        if (soc_bins < 2) throw ConfigError("scenario: soc_bins must be >= 2");
    }
};

/// Training history and test period, both aligned demand/price pairs. The
/// history ends where the test period begins.
struct ScenarioData {
    DemandSeries train_demand;
    PriceSeries train_prices;
    DemandSeries test_demand;
    PriceSeries test_prices;
};

/// Align demand and prices, then split at the first step whose local time
/// is at or after `test_start` (local midnight of that date).
inline ScenarioData split_by_date(const DemandSeries& demand, const PriceSeries& prices,
                                  std::chrono::sys_days test_start) {
    auto [d, p] = align(demand, prices);
    const auto boundary = std::chrono::sys_seconds{test_start};
    std::size_t cut = 0;
    while (cut < d.size() && d.axis().local(cut) < boundary) ++cut;
    if (cut == 0) throw DataError("scenario: no training data before the test start date");
    if (cut == d.size()) throw DataError("scenario: no test data on or after the test start date");
    return {d.slice(0, cut), p.slice(0, cut), d.slice(cut, d.size()), p.slice(cut, p.size())};
}

struct StrategyOutcome {
    std::int64_t total_cents = 0;
    std::int64_t savings_cents = 0;
    double savings_fraction = 0.0;
    double annual_cycles = 0.0;
    BillingResult bill;

    double total_dollars() const { return static_cast<double>(total_cents) / 100.0; }
    double savings_dollars() const { return static_cast<double>(savings_cents) / 100.0; }
};

struct MonthlyPeaks {
    std::chrono::year_month month;
    double no_storage_kw = 0.0;
    double hindsight_kw = 0.0;
    double controller_kw = 0.0;
};

struct ScenarioReport {
    double p_max_kw = 0.0;
    double e_max_kwh = 0.0;
    std::int64_t no_storage_cents = 0;
    StrategyOutcome hindsight;
    StrategyOutcome controller;
    /// Controller savings over hindsight savings; NaN when hindsight saves nothing.
    double capture_ratio = std::numeric_limits<double>::quiet_NaN();
    std::vector<MonthlyPeaks> peaks;

    double no_storage_dollars() const { return static_cast<double>(no_storage_cents) / 100.0; }
};

struct BacktestReport {
    std::vector<ScenarioReport> scenarios;
};

/// A single scenario together with the trajectories it was computed from.
struct ScenarioRun {
    ScenarioReport report;
    DispatchSchedule hindsight;
    ControllerRun controller;
};

namespace detail {

inline std::int64_t sum_cents(const BillingResult& bill) {
    std::int64_t total = 0;
    for (const auto& m : bill.months) total += to_cents(m.total);
    return total;
}

inline StrategyOutcome outcome(BillingResult bill, std::int64_t baseline_cents, double cycles) {
    StrategyOutcome o;
    o.total_cents = sum_cents(bill);
    o.savings_cents = baseline_cents - o.total_cents;
    o.savings_fraction = baseline_cents != 0
                             ? static_cast<double>(o.savings_cents) / static_cast<double>(baseline_cents)
                             : 0.0;
    o.annual_cycles = cycles;
    o.bill = std::move(bill);
    return o;
}

/// History immediately preceding the test period, if the two are contiguous.
inline std::span<const double> contiguous_prefix(const ScenarioData& data) {
    const auto& tr = data.train_demand;
    if (tr.axis().step_minutes == data.test_demand.axis().step_minutes &&
        tr.axis().instant(tr.size()) == data.test_demand.axis().start) {
        return tr.values();
    }
    return {};
}

} // namespace detail

/// Work shared by every battery size: the no-storage bill and the test-step
/// neighbor table (neighbors depend on demand windows only, not on targets).
class ScenarioContext {
public:
    ScenarioContext(const ScenarioData& data, const ScenarioConfig& config) : data_(&data), config_(config) {
        config_.validate(data.test_demand.axis().step_minutes);
        if (data.train_demand.axis().step_minutes != data.test_demand.axis().step_minutes) {
            throw AlignmentError("scenario: training and test resolutions differ");
        }
        const auto& test = data.test_demand;
        baseline_ = total_cost(test.axis(), test.values(), {}, data.test_prices.values(), config_.tariff,
                               BatteryParams{});
        baseline_cents_ = detail::sum_cents(baseline_);

        // Neighbor search only reads demand windows, so any target works here.
        HindsightTargets placeholder;
        placeholder.axis = data.train_demand.axis();
        placeholder.e_hist.assign(data.train_demand.size(), 0.0);
        placeholder.p_hist.assign(data.train_demand.size(), 0.0);
        auto ts = std::make_shared<const TrainingSet>(
            build_training_set(data.train_demand, placeholder, config_.kernel.lookback));
        index_ = std::make_shared<const NeighborIndex>(ts);
        table_ = precompute_neighbors(*index_, test, detail::contiguous_prefix(data), config_.kernel.k,
                                      config_.jobs);
    }

    const ScenarioData& data() const { return *data_; }
    const ScenarioConfig& config() const { return config_; }
    const BillingResult& baseline() const { return baseline_; }
    std::int64_t baseline_cents() const { return baseline_cents_; }
    const NeighborTable& neighbors() const { return table_; }

    /// Full pipeline for one battery rating.
    ScenarioRun run(double p_max_kw) const {
        const auto& d = *data_;
        const auto battery = config_.battery.for_power(p_max_kw);
        HindsightOptions lp_options;
        lp_options.method = config_.method;

        ScenarioRun out;
        out.hindsight = hindsight_benchmark(d.test_demand, d.test_prices, battery, config_.tariff, lp_options);

        std::vector<Prediction> predictions;
        if (battery.disabled()) {
            predictions.assign(d.test_demand.size(), Prediction{});
        } else {
            const auto targets = hindsight_targets(d.train_demand, battery, lp_options);
            const auto ts = build_training_set(d.train_demand, targets, config_.kernel.lookback);
            predictions = predict_from_table(table_, config_.kernel, ts.target_e(), ts.target_p());
        }
        const auto policy = train_value_table(d.train_prices, battery, config_.soc_bins);
        out.controller = run_controller(d.test_demand, d.test_prices, predictions, policy, battery, config_.controller);

        auto& r = out.report;
        r.p_max_kw = battery.p_max;
        r.e_max_kwh = battery.e_max;
        r.no_storage_cents = baseline_cents_;
        const auto& axis = d.test_demand.axis();
        const auto prices = d.test_prices.values();
        r.hindsight = detail::outcome(total_cost(axis, out.hindsight, prices, config_.tariff, battery), baseline_cents_,
                                      annual_cycles(out.hindsight, battery));
        r.controller = detail::outcome(total_cost(axis, out.controller.schedule, prices, config_.tariff, battery),
                                       baseline_cents_, annual_cycles(out.controller.schedule, battery));
        if (r.hindsight.savings_cents != 0) {
            r.capture_ratio =
                static_cast<double>(r.controller.savings_cents) / static_cast<double>(r.hindsight.savings_cents);
        }
        for (std::size_t m = 0; m < baseline_.months.size(); ++m) {
            r.peaks.push_back({baseline_.months[m].month, baseline_.months[m].billed_peak_kw,
                               r.hindsight.bill.months[m].billed_peak_kw,
                               r.controller.bill.months[m].billed_peak_kw});
        }
        return out;
    }

private:
    const ScenarioData* data_;
    ScenarioConfig config_;
    BillingResult baseline_;
    std::int64_t baseline_cents_ = 0;
    std::shared_ptr<const NeighborIndex> index_;
    NeighborTable table_;
};

/// One scenario per battery size; sizes run in parallel and the report
/// keeps the configured order.
inline BacktestReport run_sweep(const ScenarioData& data, const ScenarioConfig& config) {
    const ScenarioContext context(data, config);
    BacktestReport report;
    report.scenarios.resize(config.sizes_kw.size());
    parallel_for(config.sizes_kw.size(), config.jobs, [&](std::size_t i) {
        try {
            report.scenarios[i] = context.run(config.sizes_kw[i]).report;
        } catch (const OptimizationError& e) {
            throw OptimizationError("scenario " + io::format_double(config.sizes_kw[i]) + " kW: " + e.what());
        }
    });
    return report;
}

inline ScenarioRun run_scenario(const ScenarioData& data, const ScenarioConfig& config, double p_max_kw) {
    return ScenarioContext(data, config).run(p_max_kw);
}

} // namespace bess
