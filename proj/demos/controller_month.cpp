// Train on ten weeks of synthetic history, then run the real-time
// controller through July and compare it with the hindsight benchmark.

#include <cstdio>

#include "bess/backtest.hpp"
#include "bess/synth.hpp"

int main() {
    using namespace bess;
    SynthDemandOptions demand;
    demand.start = std::chrono::year{2024} / 4 / 22;
    demand.days = 70 + 31;
    SynthPriceOptions prices;
    prices.start = demand.start;
    prices.days = demand.days;
    const auto data =
        split_by_date(synth_demand(demand), synth_prices(prices), std::chrono::year{2024} / 7 / 1);

    ScenarioConfig config;
    config.kernel.lookback = 144;
    config.kernel.k = 25;
    config.kernel.sigma = 100.0;
    const auto run = run_scenario(data, config, 400.0);
    const auto& r = run.report;

    std::printf("battery %.0f kW / %.0f kWh, July test month\n\n", r.p_max_kw, r.e_max_kwh);
    std::printf("%-12s %12s %12s %10s %10s\n", "strategy", "bill $", "savings $", "peak kW", "cycles/yr");
    std::printf("%-12s %12.2f %12s %10.1f %10s\n", "no storage", r.no_storage_dollars(), "-",
                r.peaks.front().no_storage_kw, "-");
    std::printf("%-12s %12.2f %12.2f %10.1f %10.0f\n", "hindsight", r.hindsight.total_dollars(),
                r.hindsight.savings_dollars(), r.peaks.front().hindsight_kw, r.hindsight.annual_cycles);
    std::printf("%-12s %12.2f %12.2f %10.1f %10.0f\n", "controller", r.controller.total_dollars(),
                r.controller.savings_dollars(), r.peaks.front().controller_kw, r.controller.annual_cycles);
    std::printf("\ncontroller captures %.1f%% of the hindsight savings\n", 100.0 * r.capture_ratio);
    return 0;
}
