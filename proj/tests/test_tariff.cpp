#include <gtest/gtest.h>

#include <random>

#include "bess/tariff.hpp"

using namespace bess;

namespace {

TimeAxis month_axis(int y, unsigned m, int step = 5) {
    TimeAxis axis;
    axis.start = std::chrono::sys_days{std::chrono::year{y} / m / 1};
    axis.step_minutes = step;
    return axis;
}

std::size_t steps_in_month(int y, unsigned m, int step = 5) {
    using namespace std::chrono;
    const auto days_in = (sys_days{year{y} / m / last} - sys_days{year{y} / m / 1}).count() + 1;
    return static_cast<std::size_t>(days_in) * 24 * 60 / static_cast<std::size_t>(step);
}

TEST(BilledPeak, ConstantSignal) {
    std::vector<double> net(steps_in_month(2024, 7), 1000.0);
    EXPECT_DOUBLE_EQ(billed_peak(net, month_axis(2024, 7), TariffSchedule{}), 1000.0);
}

TEST(BilledPeak, SingleIntervalSpike) {
    std::vector<double> net(steps_in_month(2024, 3), 900.0);
    for (std::size_t i = 300; i < 303; ++i) net[i] = 1200.0; // one aligned 15-min interval
    EXPECT_DOUBLE_EQ(billed_peak(net, month_axis(2024, 3), TariffSchedule{}), 1050.0);
}

TEST(BilledPeak, TwoAdjacentIntervals) {
    std::vector<double> net(steps_in_month(2024, 3), 900.0);
    for (std::size_t i = 300; i < 306; ++i) net[i] = 1200.0;
    EXPECT_DOUBLE_EQ(billed_peak(net, month_axis(2024, 3), TariffSchedule{}), 1200.0);
}

TEST(BilledPeak, TooShortThrows) {
    std::vector<double> net(3, 1.0);
    EXPECT_THROW(billed_peak(net, month_axis(2024, 3), TariffSchedule{}), DataError);
}

// Brute force: enumerate all pairs of adjacent intervals.
double brute_billed_peak(const std::vector<double>& net, std::size_t per_interval) {
    std::vector<double> avg;
    for (std::size_t i = 0; i < net.size(); i += per_interval) {
        double s = 0.0;
        for (std::size_t k = 0; k < per_interval; ++k) s += net[i + k];
        avg.push_back(s / static_cast<double>(per_interval));
    }
    double best = -1e300;
    for (std::size_t i = 0; i + 1 < avg.size(); ++i) best = std::max(best, 0.5 * (avg[i] + avg[i + 1]));
    return best;
}

TEST(BilledPeak, PropertiesOnRandomSignals) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    const TariffSchedule tariff;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> net(3 * 96);
        for (auto& v : net) v = u(rng);
        const auto axis = month_axis(2024, 4);
        const double peak = billed_peak(net, axis, tariff);
        EXPECT_NEAR(peak, brute_billed_peak(net, 3), 1e-9);
        EXPECT_LE(peak, *std::max_element(net.begin(), net.end()));
        auto bigger = net;
        for (auto& v : bigger) v += u(rng) * 0.1;
        EXPECT_GE(billed_peak(bigger, axis, tariff), peak);
    }
}

TEST(TotalCost, CustomerChargeOnly) {
    const auto n = steps_in_month(2024, 1);
    std::vector<double> zero(n, 0.0);
    const auto bill = total_cost(month_axis(2024, 1), zero, {}, zero, TariffSchedule{}, BatteryParams{});
    ASSERT_EQ(bill.months.size(), 1u);
    EXPECT_DOUBLE_EQ(bill.total(), 71.0);
}

TEST(TotalCost, SummerAndWinterDemandCharges) {
    for (auto [month, expected] : {std::pair{7u, 42800.0 + 71.0}, std::pair{1u, 33500.0 + 71.0}}) {
        const auto n = steps_in_month(2024, month);
        std::vector<double> demand(n, 1000.0), price(n, 0.0);
        const auto bill = total_cost(month_axis(2024, month), demand, {}, price, TariffSchedule{}, BatteryParams{});
        EXPECT_NEAR(bill.total(), expected, 1e-6);
    }
}

TEST(TotalCost, AdditiveAcrossMonths) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(100.0, 900.0), pr(-0.02, 0.2);
    const std::size_t n1 = steps_in_month(2024, 5), n2 = steps_in_month(2024, 6);
    std::vector<double> demand(n1 + n2), price(n1 + n2), dis(n1 + n2);
    for (std::size_t i = 0; i < demand.size(); ++i) {
        demand[i] = u(rng);
        price[i] = pr(rng);
        dis[i] = u(rng) * 0.01;
    }
    BatteryParams b;
    b.c_deg = 0.01;
    const TariffSchedule tariff;
    const auto all = total_cost(month_axis(2024, 5), demand, dis, price, tariff, b);
    ASSERT_EQ(all.months.size(), 2u);
    EXPECT_EQ(all.months[1].season, SeasonLabel::Summer);
    const std::span<const double> d(demand), p(price), c(dis);
    const auto may = total_cost(month_axis(2024, 5), d.first(n1), c.first(n1), p.first(n1), tariff, b);
    const auto jun = total_cost(month_axis(2024, 6), d.subspan(n1), c.subspan(n1), p.subspan(n1), tariff, b);
    EXPECT_NEAR(all.total(), may.total() + jun.total(), 1e-6);
    for (const auto& m : all.months) {
        EXPECT_DOUBLE_EQ(m.total, m.demand_charge + m.energy_charge + m.degradation + m.customer);
    }
}

TEST(TotalCost, LengthMismatchThrows) {
    std::vector<double> a(10, 1.0), b(9, 1.0);
    EXPECT_THROW(total_cost(month_axis(2024, 1), a, {}, b, TariffSchedule{}, BatteryParams{}), DataError);
}

} // namespace
