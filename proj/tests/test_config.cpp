#include <gtest/gtest.h>

#include "bess/config.hpp"

using namespace bess;

TEST(Config, DefaultsMatchReferenceBattery) {
    const RunConfig c;
    EXPECT_NO_THROW(c.validate());
    const auto b = c.battery.for_power(500.0);
    EXPECT_DOUBLE_EQ(b.e_max, 1100.0);
    EXPECT_DOUBLE_EQ(b.e_min, 220.0);
    EXPECT_DOUBLE_EQ(b.e0, 550.0);
    EXPECT_EQ(c.sizes_kw.size(), 10u);
}

TEST(Config, ParsesSections) {
    const auto c = parse_config(R"(
[battery]
p_max_kw = 250
eta = 0.95
cycle_limit_per_day = none
[kernel]
lookback = 144
sigma = 25.5
[tariff]
metric = per-step
[sweep]
sizes_kw = 100, 200
[controller]
discharge_cap = above-reserve
[lp]
method = simplex
[data]
demand = load.csv
test_start = 2024-07-01
)",
                                {}, "/data");
    EXPECT_EQ(c.p_max_kw, 250.0);
    EXPECT_EQ(c.battery.eta, 0.95);
    EXPECT_FALSE(c.battery.cycle_limit_per_day.has_value());
    EXPECT_EQ(c.kernel.lookback, 144u);
    EXPECT_EQ(c.kernel.sigma, 25.5);
    EXPECT_EQ(c.tariff.metric, PeakMetric::PerStep);
    EXPECT_EQ(c.sizes_kw, (std::vector<double>{100, 200}));
    EXPECT_EQ(c.controller.discharge_cap, DischargeCap::AboveReserve);
    EXPECT_EQ(c.method, lp::Method::Simplex);
    EXPECT_EQ(c.data.demand, "/data/load.csv");
    EXPECT_EQ(*c.data.test_start, std::chrono::sys_days{std::chrono::year{2024} / 7 / 1});
}

TEST(Config, RejectsUnknownAndMalformed) {
    EXPECT_THROW(parse_config("[battery]\nsize = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("[batteries]\np_max_kw = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("[battery]\neta = fast\n"), ConfigError);
    EXPECT_THROW(parse_config("[battery]\neta = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("[tariff]\nmetric = max\n"), ConfigError);
    EXPECT_THROW(parse_config("[kernel]\nk = -3\n"), ConfigError);
    EXPECT_THROW(parse_config("[sweep\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.ini"), DataError);
}

TEST(Config, OverridesApplyOnTop) {
    RunConfig c;
    apply_override(c, "kernel.k=7");
    apply_override(c, "battery.duration_hours = 4");
    EXPECT_EQ(c.kernel.k, 7u);
    EXPECT_EQ(c.battery.duration_hours, 4.0);
    EXPECT_THROW(apply_override(c, "kernel.kk=7"), ConfigError);
    EXPECT_THROW(apply_override(c, "k=7"), ConfigError);
    EXPECT_THROW(apply_override(c, "kernel.k"), ConfigError);
}

TEST(Config, KernelFragmentRoundTrips) {
    KernelConfig k;
    k.lookback = 216;
    k.sigma = 31.25;
    k.k = 17;
    k.alpha = 0.85;
    const auto c = parse_config(kernel_to_ini(k));
    EXPECT_EQ(c.kernel.lookback, k.lookback);
    EXPECT_EQ(c.kernel.sigma, k.sigma);
    EXPECT_EQ(c.kernel.k, k.k);
    EXPECT_EQ(c.kernel.alpha, k.alpha);
}
