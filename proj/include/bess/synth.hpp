#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "bess/errors.hpp"
#include "bess/time_series.hpp"

namespace bess {

/// Office-building load: weekday occupancy plateau with morning ramp and
/// evening decay, lower weekends, summer cooling bulge, AR(1) noise and
/// occasional short load spikes. The result is affinely rescaled to the
/// requested mean and standard deviation.
struct SynthDemandOptions {
    std::chrono::sys_days start = std::chrono::year{2024} / 1 / 1;
    int days = 365;
    int step_minutes = 5;
    double mean_kw = 500.0;
    double std_kw = 180.0;
    /// Relative amplitude of the AR(1) noise; zero also disables spikes.
    double noise = 0.06;
    double noise_persistence = 0.97;
    /// Expected spike events per day and their size relative to the mean.
    double spikes_per_day = 0.25;
    double spike_height = 0.6;
    double seasonal_amplitude = 0.25;
    std::uint64_t seed = 1;
};

namespace detail {

inline double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

/// Unitless weekly shape at a local time (weekday and fractional hour).
inline double office_shape(unsigned weekday, double hour) {
    const bool weekend = weekday == 0 || weekday == 6;
    const double occupied = smoothstep((hour - 6.0) / 3.0) * (1.0 - smoothstep((hour - 17.0) / 4.0));
    const double lunch = std::exp(-0.5 * std::pow((hour - 13.5) / 1.5, 2.0));
    if (weekend) return 0.35 + 0.15 * occupied;
    return 0.35 + 0.65 * occupied + 0.08 * lunch;
}

inline std::vector<double> rescale(std::vector<double> v, double mean, double sd) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    const double s = std::sqrt(var / static_cast<double>(v.size()));
    for (double& x : v) x = s > 0.0 ? mean + (x - m) * sd / s : mean;
    return v;
}

} // namespace detail

inline DemandSeries synth_demand(const SynthDemandOptions& o) {
    if (o.days < 1) throw ConfigError("synth: days must be >= 1");
    if (o.mean_kw < 0.0 || o.std_kw < 0.0) throw ConfigError("synth: mean and std must be >= 0");
    TimeAxis axis;
    axis.start = std::chrono::sys_seconds{o.start};
    axis.step_minutes = o.step_minutes;
    const std::size_t per_day = static_cast<std::size_t>(24 * 60 / o.step_minutes);
    const std::size_t n = static_cast<std::size_t>(o.days) * per_day;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> v(n);
    double ar = 0.0;
    const double innovation = std::sqrt(1.0 - o.noise_persistence * o.noise_persistence);
    const double spike_prob = o.spikes_per_day / static_cast<double>(per_day);
    std::size_t spike_left = 0;
    double spike_level = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto local = axis.local(i);
        const auto day = std::chrono::floor<std::chrono::days>(local);
        const unsigned weekday = std::chrono::weekday{day}.c_encoding();
        const double hour = static_cast<double>((local - day).count()) / 3600.0;
        const double doy = static_cast<double>(
            (day - std::chrono::sys_days{std::chrono::year_month_day{day}.year() / 1 / 1}).count());
        // cooling peaks mid-July, mild heating bump in January
        const double season = 1.0 + o.seasonal_amplitude * std::exp(-0.5 * std::pow((doy - 196.0) / 40.0, 2.0)) +
                              0.3 * o.seasonal_amplitude * std::exp(-0.5 * std::pow((doy - 15.0) / 25.0, 2.0));
        double x = detail::office_shape(weekday, hour) * season;
        if (o.noise > 0.0) {
            ar = o.noise_persistence * ar + innovation * gauss(rng);
            x += o.noise * ar;
            if (spike_left == 0 && unit(rng) < spike_prob) {
                spike_left = 3 + static_cast<std::size_t>(unit(rng) * 15.0 * 5.0 / o.step_minutes);
                spike_level = o.spike_height * (0.4 + 0.6 * unit(rng));
            }
            if (spike_left > 0) {
                x += spike_level;
                --spike_left;
            }
        }
        v[i] = x;
    }
    v = detail::rescale(std::move(v), o.mean_kw, o.std_kw);
    for (double& x : v) x = std::max(x, 0.0);
    return DemandSeries(axis, std::move(v));
}

/// Hourly real-time prices ($/kWh): overnight trough, afternoon peak that
/// is stronger on weekdays and in summer, log-normal noise and rare scarcity
/// spikes.
struct SynthPriceOptions {
    std::chrono::sys_days start = std::chrono::year{2024} / 1 / 1;
    int days = 365;
    double base = 0.045;
    double daily_swing = 0.05;
    double noise = 0.3;
    double spikes_per_day = 0.02;
    std::uint64_t seed = 2;
};

inline PriceSeries synth_prices(const SynthPriceOptions& o) {
    if (o.days < 1) throw ConfigError("synth: days must be >= 1");
    TimeAxis axis;
    axis.start = std::chrono::sys_seconds{o.start};
    axis.step_minutes = 60;
    const std::size_t n = static_cast<std::size_t>(o.days) * 24;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto local = axis.local(i);
        const auto day = std::chrono::floor<std::chrono::days>(local);
        const unsigned weekday = std::chrono::weekday{day}.c_encoding();
        const double hour = static_cast<double>((local - day).count()) / 3600.0;
        const unsigned month = static_cast<unsigned>(std::chrono::year_month_day{day}.month());
        const bool summer = month >= 6 && month <= 9;
        const double weekday_factor = (weekday == 0 || weekday == 6) ? 0.6 : 1.0;
        const double shape = -0.45 * std::exp(-0.5 * std::pow((hour - 3.5) / 2.5, 2.0)) +
                             std::exp(-0.5 * std::pow((hour - 16.5) / 2.5, 2.0));
        double price = o.base + o.daily_swing * weekday_factor * (summer ? 1.4 : 1.0) * shape;
        price *= std::exp(o.noise * gauss(rng) - 0.5 * o.noise * o.noise);
        if (unit(rng) < o.spikes_per_day / 24.0) price += 0.2 + 0.6 * unit(rng);
        v[i] = price;
    }
    return PriceSeries(axis, std::move(v));
}

} // namespace bess
