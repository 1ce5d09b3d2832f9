#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bess/battery.hpp"
#include "bess/errors.hpp"
#include "bess/time_series.hpp"

namespace bess {

enum class PeakMetric {
    /// Max over windows of consecutive clock-aligned interval averages
    /// (default: two adjacent 15-minute intervals).
    IntervalAverage,
    /// Max of the raw per-step values, matching the LP peak variable.
    PerStep,
};

struct TariffSchedule {
    double kappa_summer = 42.80;
    double kappa_nonsummer = 33.50;
    double customer_charge = 71.0;
    int metric_interval_minutes = 15;
    int metric_consecutive_intervals = 2;
    PeakMetric metric = PeakMetric::IntervalAverage;

    double kappa(SeasonLabel season) const { return season == SeasonLabel::Summer ? kappa_summer : kappa_nonsummer; }

    void validate(int step_minutes) const {
        if (kappa_summer < 0.0 || kappa_nonsummer < 0.0 || customer_charge < 0.0) {
            throw ConfigError("tariff: charges must be >= 0");
        }
        if (metric_consecutive_intervals < 1) throw ConfigError("tariff: metric_consecutive_intervals must be >= 1");
        if (metric_interval_minutes <= 0 || metric_interval_minutes % step_minutes != 0) {
            throw ConfigError("tariff: metric interval of " + std::to_string(metric_interval_minutes) +
                              " min is not a multiple of the " + std::to_string(step_minutes) + " min step");
        }
    }
};

/// Billed peak of one month of net demand. `axis` locates sample 0 so that
/// metering intervals align with the local clock; intervals cut by the
/// slice edges average the samples they contain.
inline double billed_peak(std::span<const double> net_demand, const TimeAxis& axis, const TariffSchedule& tariff) {
    if (net_demand.empty()) throw DataError("billed_peak: empty slice");
    if (tariff.metric == PeakMetric::PerStep) {
        return *std::max_element(net_demand.begin(), net_demand.end());
    }
    tariff.validate(axis.step_minutes);
    const long long interval_seconds = tariff.metric_interval_minutes * 60LL;
    std::vector<double> averages;
    long long current = 0;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < net_demand.size(); ++i) {
        const long long key = axis.local(i).time_since_epoch().count() / interval_seconds;
        if (count > 0 && key != current) {
            averages.push_back(sum / static_cast<double>(count));
            sum = 0.0;
            count = 0;
        }
        current = key;
        sum += net_demand[i];
        ++count;
    }
    averages.push_back(sum / static_cast<double>(count));

    const auto window = static_cast<std::size_t>(tariff.metric_consecutive_intervals);
    if (averages.size() < window) {
        throw DataError("billed_peak: slice holds " + std::to_string(averages.size()) + " metering intervals, need " +
                        std::to_string(window));
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + window <= averages.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < window; ++k) s += averages[i + k];
        best = std::max(best, s / static_cast<double>(window));
    }
    return best;
}

struct MonthlyBill {
    std::chrono::year_month month;
    SeasonLabel season = SeasonLabel::NonSummer;
    double billed_peak_kw = 0.0;
    double demand_charge = 0.0;
    double energy_charge = 0.0;
    double degradation = 0.0;
    double customer = 0.0;
    double total = 0.0;
};

struct BillingResult {
    std::vector<MonthlyBill> months;

    double total() const {
        double s = 0.0;
        for (const auto& m : months) s += m.total;
        return s;
    }
    double demand_charges() const {
        double s = 0.0;
        for (const auto& m : months) s += m.demand_charge;
        return s;
    }
};

/// Whole-dollar amounts are compared and differenced in integer cents so
/// that report arithmetic is exact.
inline std::int64_t to_cents(double dollars) { return static_cast<std::int64_t>(std::llround(dollars * 100.0)); }

/// Bill a net-demand trajectory month by month. `discharge` may be empty
/// (no battery, no degradation cost).
inline BillingResult total_cost(const TimeAxis& axis, std::span<const double> net_demand,
                                std::span<const double> discharge, std::span<const double> prices,
                                const TariffSchedule& tariff, const BatteryParams& params) {
    if (prices.size() != net_demand.size() || (!discharge.empty() && discharge.size() != net_demand.size())) {
        throw DataError("total_cost: net demand, discharge and price lengths differ");
    }
    const double dt = axis.step_hours();
    BillingResult result;
    for (const auto& block : month_blocks(axis, net_demand.size())) {
        MonthlyBill bill;
        bill.month = block.first_day.year() / block.first_day.month();
        bill.season = season_of(block.first_day);
        bill.billed_peak_kw = billed_peak(net_demand.subspan(block.begin, block.size()), axis.shifted(block.begin), tariff);
        bill.demand_charge = tariff.kappa(bill.season) * std::max(bill.billed_peak_kw, 0.0);
        for (std::size_t t = block.begin; t < block.end; ++t) {
            bill.energy_charge += prices[t] * net_demand[t] * dt;
            if (!discharge.empty()) bill.degradation += params.c_deg * discharge[t] * dt;
        }
        bill.customer = tariff.customer_charge;
        bill.total = bill.demand_charge + bill.energy_charge + bill.degradation + bill.customer;
        result.months.push_back(bill);
    }
    return result;
}

inline BillingResult total_cost(const TimeAxis& axis, const DispatchSchedule& schedule, std::span<const double> prices,
                                const TariffSchedule& tariff, const BatteryParams& params) {
    return total_cost(axis, schedule.net_demand, schedule.discharge, prices, tariff, params);
}

} // namespace bess
