#pragma once

// Reference peak-shaving answers without any LP: bisection on the peak
// with a backward required-SoC pass, then the lowest SoC path that still
// respects the requirement.

#include <algorithm>
#include <vector>

#include "bess/battery.hpp"

namespace oracle {

/// required[t] = smallest SoC at the start of step t from which every later
/// step can hold net demand <= peak. Empty if some step is impossible.
inline std::vector<double> required_soc(const std::vector<double>& demand, double peak, const bess::BatteryParams& b,
                                        double dt) {
    const std::size_t T = demand.size();
    std::vector<double> req(T + 1, b.e_min);
    for (std::size_t k = T; k-- > 0;) {
        const double excess = demand[k] - peak;
        double r;
        if (excess > 0.0) {
            if (excess > b.p_max + 1e-12) return {};
            r = req[k + 1] + excess * dt / b.eta;
        } else {
            r = req[k + 1] - b.eta * dt * std::min(b.p_max, -excess);
        }
        req[k] = std::max(b.e_min, r);
        if (req[k] > b.e_max + 1e-12) return {};
    }
    return req;
}

inline bool peak_feasible(const std::vector<double>& demand, double peak, const bess::BatteryParams& b, double dt) {
    const auto req = required_soc(demand, peak, b, dt);
    return !req.empty() && req[0] <= b.e0 + 1e-12;
}

inline double min_peak(const std::vector<double>& demand, const bess::BatteryParams& b, double dt) {
    double hi = *std::max_element(demand.begin(), demand.end());
    if (peak_feasible(demand, 0.0, b, dt)) return 0.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-11; ++i) {
        const double mid = 0.5 * (lo + hi);
        (peak_feasible(demand, mid, b, dt) ? hi : lo) = mid;
    }
    return hi;
}

/// Pointwise-lowest SoC path (after each step) holding the given peak.
inline std::vector<double> lowest_soc_path(const std::vector<double>& demand, double peak,
                                           const bess::BatteryParams& b, double dt) {
    const auto req = required_soc(demand, peak, b, dt);
    std::vector<double> path(demand.size());
    double e = b.e0;
    for (std::size_t t = 0; t < demand.size(); ++t) {
        e = std::max({req[t + 1], e - b.p_max * dt / b.eta, b.e_min});
        path[t] = e;
    }
    return path;
}

} // namespace oracle
