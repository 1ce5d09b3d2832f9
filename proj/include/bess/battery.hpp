#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bess/errors.hpp"

namespace bess {

inline constexpr double kSocTolerance = 1e-9;

/// Physical and economic battery description. Powers in kW, energies in kWh,
/// degradation cost in $ per kWh discharged.
struct BatteryParams {
    double p_max = 0.0;
    double e_max = 0.0;
    double e_min = 0.0;
    double eta = 1.0;
    double e0 = 0.0;
    double c_deg = 0.0;
    /// Average full cycles allowed per day (hindsight benchmark only).
    std::optional<double> cycle_limit_per_day;

    /// Ratings as quoted for commercial systems: power, duration (E/P), and
    /// fractions of the energy capacity for the floor and starting SoC.
    static BatteryParams from_rating(double p_max_kw, double duration_hours, double e_min_frac, double e0_frac,
                                     double eta, double c_deg = 0.0) {
        BatteryParams b;
        b.p_max = p_max_kw;
        b.e_max = p_max_kw * duration_hours;
        b.e_min = e_min_frac * b.e_max;
        b.e0 = e0_frac * b.e_max;
        b.eta = eta;
        b.c_deg = c_deg;
        b.validate();
        return b;
    }

    /// A zero-capacity battery (p_max = e_max = 0) is accepted and means
    /// "no storage".
    bool disabled() const { return p_max == 0.0 || e_max == e_min; }

    void validate() const {
        auto fail = [](const std::string& what) { throw ConfigError("battery: " + what); };
        for (double v : {p_max, e_max, e_min, eta, e0, c_deg}) {
            if (!std::isfinite(v)) fail("parameters must be finite");
        }
        if (p_max < 0.0) fail("p_max must be >= 0");
        if (e_min < 0.0) fail("e_min must be >= 0");
        if (e_max < e_min) fail("e_max must be >= e_min");
        if (e_max == e_min && e_max != 0.0) fail("e_max must exceed e_min");
        if (!(eta > 0.0 && eta <= 1.0)) fail("eta must lie in (0, 1]");
        if (e0 < e_min - kSocTolerance || e0 > e_max + kSocTolerance) fail("e0 must lie in [e_min, e_max]");
        if (c_deg < 0.0) fail("c_deg must be >= 0");
        if (cycle_limit_per_day && !(*cycle_limit_per_day > 0.0)) fail("cycle_limit_per_day must be > 0");
    }
};

/// One SoC update: e - d*dt/eta + eta*q*dt. Throws BoundViolation if the
/// result leaves [e_min, e_max] by more than the tolerance.
inline double soc_step(double e, double d, double q, double dt_hours, const BatteryParams& params) {
    const double next = e - d * dt_hours / params.eta + params.eta * q * dt_hours;
    if (next < params.e_min - kSocTolerance || next > params.e_max + kSocTolerance) {
        throw BoundViolation("SoC " + std::to_string(next) + " kWh outside [" + std::to_string(params.e_min) + ", " +
                             std::to_string(params.e_max) + "]");
    }
    return next;
}

/// Per-step battery dispatch and its effect on the meter. soc[t] is the SoC
/// after step t (e_{t+1}).
struct DispatchSchedule {
    double step_hours = 1.0 / 12.0;
    std::vector<double> discharge;
    std::vector<double> charge;
    std::vector<double> soc;
    std::vector<double> net_demand;

    std::size_t size() const { return discharge.size(); }

    static DispatchSchedule idle(const std::vector<double>& demand, double step_hours, double e0) {
        DispatchSchedule s;
        s.step_hours = step_hours;
        s.discharge.assign(demand.size(), 0.0);
        s.charge.assign(demand.size(), 0.0);
        s.soc.assign(demand.size(), e0);
        s.net_demand = demand;
        return s;
    }

    double discharged_energy() const {
        double total = 0.0;
        for (double d : discharge) total += d * step_hours;
        return total;
    }

    void append(const DispatchSchedule& other) {
        discharge.insert(discharge.end(), other.discharge.begin(), other.discharge.end());
        charge.insert(charge.end(), other.charge.begin(), other.charge.end());
        soc.insert(soc.end(), other.soc.begin(), other.soc.end());
        net_demand.insert(net_demand.end(), other.net_demand.begin(), other.net_demand.end());
    }
};

/// Discharged energy over nominal capacity, scaled to a 365-day year.
inline double annual_cycles(const DispatchSchedule& schedule, const BatteryParams& params) {
    if (schedule.size() == 0) throw DataError("annual_cycles: empty schedule");
    if (params.e_max <= 0.0) return 0.0;
    const double days = static_cast<double>(schedule.size()) * schedule.step_hours / 24.0;
    return schedule.discharged_energy() / params.e_max * (365.0 / days);
}

} // namespace bess
