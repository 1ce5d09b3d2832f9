// Perfect-foresight peak shaving for one synthetic July week: prints the
// daily raw and shaved peaks of a 300 kW / 660 kWh battery.

#include <algorithm>
#include <cstdio>

#include "bess/hindsight.hpp"
#include "bess/synth.hpp"

int main() {
    using namespace bess;
    SynthDemandOptions opts;
    opts.start = std::chrono::year{2024} / 7 / 8;
    opts.days = 7;
    const auto demand = synth_demand(opts);
    const auto battery = BatteryParams::from_rating(300.0, 2.2, 0.2, 0.5, 0.9);

    LpProblem problem;
    problem.variant = LpVariant::PeakShaving;
    problem.demand = demand.values();
    problem.battery = battery;
    problem.step_hours = demand.step_hours();
    const auto solution = solve_peak_shaving(problem);
    if (!solution.optimal()) {
        std::fprintf(stderr, "peak-shaving LP did not reach optimality\n");
        return 1;
    }

    // Express the SoC path as exclusive charge or discharge per step.
    std::vector<double> discharge, charge, net_demand;
    canonicalize_dispatch(battery.e0, solution.soc, demand.values(), battery, problem.step_hours, discharge, charge,
                          net_demand);

    std::printf("week peak: %.1f kW raw, %.1f kW shaved\n\n", *std::max_element(demand.values().begin(),
                                                                                 demand.values().end()),
                solution.peak);
    std::printf("%-12s %10s %10s %12s\n", "day", "raw kW", "net kW", "out kWh");
    const std::size_t per_day = 288;
    for (std::size_t day = 0; day < 7; ++day) {
        double raw = 0.0, net = 0.0, delivered = 0.0;
        for (std::size_t t = day * per_day; t < (day + 1) * per_day; ++t) {
            raw = std::max(raw, demand[t]);
            net = std::max(net, net_demand[t]);
            delivered += discharge[t] * problem.step_hours;
        }
        const auto date = std::chrono::year_month_day{opts.start + std::chrono::days{day}};
        std::printf("%04d-%02u-%02u   %10.1f %10.1f %12.1f\n", static_cast<int>(date.year()),
                    static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()), raw, net, delivered);
    }
    return 0;
}
