#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bess/battery.hpp"
#include "bess/errors.hpp"
#include "bess/time_series.hpp"

namespace bess {

/// Power the controller could still absorb or deliver this step, in kW.
struct Headroom {
    double q_max_hint = std::numeric_limits<double>::infinity();
    double d_max_hint = std::numeric_limits<double>::infinity();
};

/// Charge and discharge bids in kW; at most one is positive.
struct ArbitrageBid {
    double charge = 0.0;
    double discharge = 0.0;
};

/// Non-anticipatory arbitrage rule: sees only the current price and state.
class ArbitragePolicy {
public:
    virtual ~ArbitragePolicy() = default;
    virtual ArbitrageBid step(double price_now, double soc, const Headroom& headroom,
                              const BatteryParams& params) const = 0;
};

/// Never trades. Useful for peak-shaving-only runs.
class IdlePolicy final : public ArbitragePolicy {
public:
    ArbitrageBid step(double, double, const Headroom&, const BatteryParams&) const override { return {}; }
};

/// Threshold policy from a marginal value of stored energy v(e) in $/kWh.
/// Discharge at full power when the price beats v/eta + c, charge at full
/// power when it is below v*eta, otherwise stay idle.
class ValueTablePolicy final : public ArbitragePolicy {
public:
    ValueTablePolicy() = default;
    ValueTablePolicy(double e_lo, double e_hi, std::vector<double> marginal_value, double dp_value_at_e0 = 0.0)
        : e_lo_(e_lo), e_hi_(e_hi), value_(std::move(marginal_value)), dp_value_(dp_value_at_e0) {
        if (value_.size() < 2) throw ConfigError("value table needs at least two SoC points");
    }

    /// Linear interpolation on the SoC grid, clamped at the ends.
    double marginal_value(double soc) const {
        if (value_.empty()) return 0.0;
        if (e_hi_ <= e_lo_) return value_.front();
        const double pos = std::clamp((soc - e_lo_) / (e_hi_ - e_lo_), 0.0, 1.0) *
                           static_cast<double>(value_.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(pos), value_.size() - 2);
        const double f = pos - static_cast<double>(i);
        return value_[i] * (1.0 - f) + value_[i + 1] * f;
    }

    ArbitrageBid step(double price_now, double soc, const Headroom&, const BatteryParams& params) const override {
        if (params.p_max <= 0.0) return {};
        // break-even prices stay idle
        constexpr double tie = 1e-12;
        const double v = marginal_value(soc);
        if (price_now > v / params.eta + params.c_deg + tie) return {0.0, params.p_max};
        if (price_now < v * params.eta - tie) return {params.p_max, 0.0};
        return {};
    }

    double soc_low() const { return e_lo_; }
    double soc_high() const { return e_hi_; }
    const std::vector<double>& table() const { return value_; }
    /// Optimal revenue of the training DP from the initial SoC, in $.
    double dp_value() const { return dp_value_; }

private:
    double e_lo_ = 0.0;
    double e_hi_ = 0.0;
    std::vector<double> value_;
    double dp_value_ = 0.0;
};

namespace detail {

/// Pool-adjacent-violators fit of a nonincreasing sequence (equal weights).
inline std::vector<double> nonincreasing_fit(const std::vector<double>& y) {
    struct Block {
        double sum;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            const auto& a = blocks[blocks.size() - 2];
            const auto& b = blocks.back();
            if (a.sum / static_cast<double>(a.count) >= b.sum / static_cast<double>(b.count)) break;
            Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
    return out;
}

} // namespace detail

/// Backward dynamic program over a uniform SoC grid maximising
/// sum(price * (d - q) * dt - c * d * dt) on historical prices. The stored
/// table is the time-averaged slope of the value function, made
/// nonincreasing in SoC.
inline ValueTablePolicy train_value_table(std::span<const double> prices, double step_hours,
                                          const BatteryParams& params, std::size_t soc_bins = 100) {
    if (soc_bins < 2) throw ConfigError("value table: soc_bins must be >= 2");
    if (prices.empty()) throw DataError("value table: empty price history");
    params.validate();
    const double lo = params.e_min;
    const double hi = params.e_max;
    if (params.disabled() || hi <= lo) {
        return ValueTablePolicy(lo, hi, std::vector<double>(soc_bins, 0.0));
    }
    const std::size_t B = soc_bins;
    const double width = (hi - lo) / static_cast<double>(B - 1);
    const double dt = step_hours;
    const double eta = params.eta;
    // Grid moves reachable within one step at full power.
    const auto up_bins = static_cast<std::ptrdiff_t>(std::floor(params.p_max * eta * dt / width + 1e-9));
    const auto down_bins = static_cast<std::ptrdiff_t>(std::floor(params.p_max * dt / eta / width + 1e-9));

    std::vector<double> next(B, 0.0), cur(B, 0.0), slope_sum(B, 0.0);
    for (std::size_t t = prices.size(); t-- > 0;) {
        const double price = prices[t];
        for (std::size_t i = 0; i < B; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            const auto ii = static_cast<std::ptrdiff_t>(i);
            const auto j_lo = std::max<std::ptrdiff_t>(0, ii - down_bins);
            const auto j_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(B) - 1, ii + up_bins);
            for (auto j = j_lo; j <= j_hi; ++j) {
                const double change = static_cast<double>(j - ii) * width;
                double reward;
                if (change < 0.0) {
                    const double energy_out = -change * eta;
                    reward = (price - params.c_deg) * energy_out;
                } else {
                    reward = -price * change / eta;
                }
                best = std::max(best, reward + next[static_cast<std::size_t>(j)]);
            }
            cur[i] = best;
        }
        for (std::size_t i = 0; i < B; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 == B ? B - 1 : i + 1;
            slope_sum[i] += (cur[b] - cur[a]) / (static_cast<double>(b - a) * width);
        }
        std::swap(cur, next);
    }
    std::vector<double> slope(B);
    for (std::size_t i = 0; i < B; ++i) slope[i] = slope_sum[i] / static_cast<double>(prices.size());
    // next now holds the value at the first step
    const double pos = (params.e0 - lo) / width;
    const auto i0 = std::min(static_cast<std::size_t>(std::max(0.0, pos)), B - 2);
    const double f = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
    const double value0 = next[i0] * (1.0 - f) + next[i0 + 1] * f;
    return ValueTablePolicy(lo, hi, detail::nonincreasing_fit(slope), value0);
}

inline ValueTablePolicy train_value_table(const PriceSeries& prices, const BatteryParams& params,
                                          std::size_t soc_bins = 100) {
    return train_value_table(prices.values(), prices.step_hours(), params, soc_bins);
}

} // namespace bess
