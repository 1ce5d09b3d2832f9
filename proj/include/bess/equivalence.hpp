#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bess/battery.hpp"
#include "bess/hindsight.hpp"

namespace bess {

struct EquivalenceInstance {
    std::vector<double> demand;
    std::vector<double> prices;
    BatteryParams battery;
    double step_hours = 5.0 / 60.0;
};

/// Random 5-minute instance: a smooth base load with a few spikes, positive
/// real-time prices and a battery of random rating, duration and efficiency.
inline EquivalenceInstance random_equivalence_instance(std::mt19937_64& rng, std::size_t min_steps = 24,
                                                       std::size_t max_steps = 288) {
    std::uniform_int_distribution<std::size_t> length(min_steps, max_steps);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EquivalenceInstance in;
    const std::size_t T = length(rng);
    const double base = 200.0 + 600.0 * unit(rng);
    const double swing = 0.4 * base * unit(rng);
    const double phase = 6.283185307179586 * unit(rng);
    in.demand.resize(T);
    in.prices.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double x = static_cast<double>(t) / static_cast<double>(T);
        in.demand[t] = base + swing * std::sin(6.283185307179586 * x + phase) + 0.05 * base * (unit(rng) - 0.5);
        if (unit(rng) < 0.03) in.demand[t] += base * (0.2 + 0.6 * unit(rng));
        in.demand[t] = std::max(in.demand[t], 0.0);
        in.prices[t] = 0.02 + 0.15 * unit(rng);
    }
    const double p_max = 50.0 + 250.0 * unit(rng);
    const double duration = 1.0 + 3.0 * unit(rng);
    const double e_min_frac = 0.3 * unit(rng);
    const double e0_frac = e_min_frac + (1.0 - e_min_frac) * unit(rng);
    const double eta = 0.85 + 0.15 * unit(rng);
    in.battery = BatteryParams::from_rating(p_max, duration, e_min_frac, e0_frac, eta, 0.0);
    return in;
}

struct EquivalenceSummary {
    std::size_t instances = 0;
    double max_peak_gap = 0.0;
    double max_arbitrage_gap = 0.0;
    std::vector<EquivalenceReport> reports;

    bool within(double peak_tol, double arbitrage_tol) const {
        return max_peak_gap <= peak_tol && max_arbitrage_gap <= arbitrage_tol;
    }
};

/// Solve the combined and two-stage formulations on `count` seeded
/// instances with kappa = kappa_scale * max price * dt * T.
inline EquivalenceSummary run_equivalence_suite(std::uint64_t seed, std::size_t count, double kappa_scale = 1e4,
                                                std::size_t min_steps = 24, std::size_t max_steps = 288) {
    std::mt19937_64 rng(seed);
    EquivalenceSummary summary;
    for (std::size_t i = 0; i < count; ++i) {
        const auto in = random_equivalence_instance(rng, min_steps, max_steps);
        auto report =
            verify_proposition1(in.demand, in.prices, in.battery, in.step_hours, kappa_scale, lp::Method::Simplex);
        summary.max_peak_gap = std::max(summary.max_peak_gap, report.peak_gap());
        summary.max_arbitrage_gap = std::max(summary.max_arbitrage_gap, report.arbitrage_gap());
        summary.reports.push_back(report);
        ++summary.instances;
    }
    return summary;
}

} // namespace bess
