#include <gtest/gtest.h>

#include <random>

#include "bess/arbitrage_policy.hpp"

using namespace bess;

namespace {

BatteryParams unit_battery(double eta, double c_deg = 0.0) {
    BatteryParams b;
    b.p_max = 100.0;
    b.e_max = 100.0;
    b.e_min = 0.0;
    b.e0 = 0.0;
    b.eta = eta;
    b.c_deg = c_deg;
    return b;
}

/// Follow the policy on a price path with exact battery dynamics and return
/// the realised revenue in $.
double realised_revenue(const ValueTablePolicy& policy, const std::vector<double>& prices, double dt,
                        const BatteryParams& b) {
    double e = b.e0;
    double revenue = 0.0;
    for (double price : prices) {
        const auto bid = policy.step(price, e, {}, b);
        const double d = std::min(bid.discharge, (e - b.e_min) * b.eta / dt);
        const double q = std::min(bid.charge, (b.e_max - e) / (b.eta * dt));
        e = soc_step(e, d, q, dt, b);
        revenue += price * (d - q) * dt - b.c_deg * d * dt;
    }
    return revenue;
}

} // namespace

TEST(ValueTable, ConstantPriceNeverTrades) {
    const std::vector<double> prices(48, 0.08);
    for (double eta : {1.0, 0.9}) {
        auto b = unit_battery(eta);
        b.e0 = 50.0;
        const auto policy = train_value_table(prices, 1.0, b, 101);
        for (double e : {0.0, 25.0, 50.0, 99.0}) {
            const auto bid = policy.step(0.08, e, {}, b);
            EXPECT_EQ(bid.charge, 0.0) << "eta " << eta << " soc " << e;
            EXPECT_EQ(bid.discharge, 0.0) << "eta " << eta << " soc " << e;
        }
    }
}

TEST(ValueTable, TwoLevelPriceCapturesFullSpread) {
    const std::vector<double> prices{0.1, 0.1, 0.1, 0.3, 0.3, 0.3};
    const auto b = unit_battery(1.0);
    const auto policy = train_value_table(prices, 1.0, b, 101);
    EXPECT_NEAR(policy.dp_value(), 0.2 * 100.0, 1e-9);
    EXPECT_NEAR(realised_revenue(policy, prices, 1.0, b), policy.dp_value(), 1e-9);
}

TEST(ValueTable, DegradationAboveSpreadStopsTrading) {
    const std::vector<double> prices{0.1, 0.1, 0.1, 0.3, 0.3, 0.3};
    const auto b = unit_battery(1.0, 0.25);
    const auto policy = train_value_table(prices, 1.0, b, 101);
    EXPECT_NEAR(policy.dp_value(), 0.0, 1e-12);
    EXPECT_NEAR(realised_revenue(policy, prices, 1.0, b), 0.0, 1e-12);
}

TEST(ValueTable, BidsAreSaturatedOrIdle) {
    auto b = unit_battery(0.9, 0.01);
    const ValueTablePolicy policy(0.0, 100.0, {0.2, 0.2});
    const auto sell = policy.step(0.5, 50.0, {}, b);
    EXPECT_EQ(sell.discharge, b.p_max);
    EXPECT_EQ(sell.charge, 0.0);
    const auto buy = policy.step(0.1, 50.0, {}, b);
    EXPECT_EQ(buy.charge, b.p_max);
    EXPECT_EQ(buy.discharge, 0.0);
    // Inside [v*eta, v/eta + c] nothing happens.
    for (double price : {0.18, 0.2, 0.2 / 0.9 + 0.0099}) {
        const auto idle = policy.step(price, 50.0, {}, b);
        EXPECT_EQ(idle.charge, 0.0) << price;
        EXPECT_EQ(idle.discharge, 0.0) << price;
    }
    b.eta = 1.0;
    b.c_deg = 0.0;
    const auto at_value = policy.step(0.2, 50.0, {}, b);
    EXPECT_EQ(at_value.charge + at_value.discharge, 0.0);
}

TEST(ValueTable, MarginalValueIsNonincreasingAndInterpolates) {
    std::mt19937_64 rng(4);
    std::lognormal_distribution<double> price(std::log(0.05), 0.5);
    std::vector<double> prices(24 * 60);
    for (auto& p : prices) p = price(rng);
    const auto b = BatteryParams::from_rating(200.0, 2.0, 0.1, 0.5, 0.9);
    const auto policy = train_value_table(prices, 1.0, b, 80);
    const auto& v = policy.table();
    ASSERT_EQ(v.size(), 80u);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1] + 1e-15);
    EXPECT_EQ(policy.marginal_value(b.e_min - 10.0), v.front());
    EXPECT_EQ(policy.marginal_value(b.e_max + 10.0), v.back());
    const ValueTablePolicy linear(0.0, 10.0, {1.0, 0.0});
    EXPECT_NEAR(linear.marginal_value(2.5), 0.75, 1e-15);
}

TEST(ValueTable, DynamicProgramBoundsTheThresholdRule) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> prices(24 * 14);
        for (std::size_t t = 0; t < prices.size(); ++t) {
            prices[t] = 0.05 + 0.04 * std::sin(6.283185307179586 * static_cast<double>(t % 24) / 24.0) +
                        0.03 * unit(rng);
        }
        const auto b = BatteryParams::from_rating(100.0, 1.0 + 3.0 * unit(rng), 0.2, 0.5, 0.85 + 0.15 * unit(rng));
        const auto policy = train_value_table(prices, 1.0, b, 201);
        const double greedy = realised_revenue(policy, prices, 1.0, b);
        EXPECT_LE(greedy, policy.dp_value() * 1.01 + 1e-6) << "trial " << trial;
    }
}

TEST(ValueTable, DisabledBatteryAndBadInputs) {
    BatteryParams none;
    const auto policy = train_value_table(std::vector<double>{0.1, 0.2}, 1.0, none, 10);
    EXPECT_EQ(policy.step(1.0, 0.0, {}, none).discharge, 0.0);
    EXPECT_THROW(train_value_table(std::vector<double>{}, 1.0, unit_battery(1.0)), DataError);
    EXPECT_THROW(train_value_table(std::vector<double>{0.1}, 1.0, unit_battery(1.0), 1), ConfigError);
    EXPECT_THROW(ValueTablePolicy(0.0, 1.0, {1.0}), ConfigError);
}

TEST(IdlePolicy, NeverBids) {
    const IdlePolicy idle;
    const auto bid = idle.step(10.0, 50.0, {}, unit_battery(1.0));
    EXPECT_EQ(bid.charge + bid.discharge, 0.0);
}
