#include <gtest/gtest.h>

#include <random>

#include "bess/battery.hpp"

using namespace bess;

namespace {

BatteryParams params() {
    BatteryParams b;
    b.p_max = 100.0;
    b.e_max = 1000.0;
    b.e_min = 200.0;
    b.e0 = 500.0;
    b.eta = 0.9;
    return b;
}

TEST(SocStep, Examples) {
    const auto b = params();
    const double dt = 1.0 / 12.0;
    EXPECT_DOUBLE_EQ(soc_step(500.0, 0.0, 0.0, dt, b), 500.0);
    EXPECT_NEAR(soc_step(500.0, 90.0, 0.0, dt, b), 500.0 - 7.5 / 0.9, 1e-12);
    EXPECT_NEAR(soc_step(500.0, 0.0, 90.0, dt, b), 506.75, 1e-12);
}

TEST(SocStep, BoundViolationThrows) {
    const auto b = params();
    EXPECT_THROW(soc_step(201.0, 100.0, 0.0, 1.0, b), BoundViolation);
    EXPECT_THROW(soc_step(999.0, 0.0, 100.0, 1.0, b), BoundViolation);
    EXPECT_NO_THROW(soc_step(200.0 + 1e-10, 0.0, 0.0, 1.0, b));
}

TEST(SocStep, MonotoneAndLossy) {
    const auto b = params();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double d = u(rng), q = u(rng), extra = u(rng);
        EXPECT_GE(soc_step(500.0, d, q + extra, 0.25, b), soc_step(500.0, d, q, 0.25, b));
        EXPECT_LE(soc_step(500.0, d + extra, q, 0.25, b), soc_step(500.0, d, q, 0.25, b));
        // charge q for one step then discharge the stored energy back out
        const double up = soc_step(500.0, 0.0, q, 0.25, b);
        const double back = soc_step(up, q, 0.0, 0.25, b);
        if (q > 0.0) EXPECT_LT(back, 500.0);
    }
}

TEST(Params, ValidationAndRating) {
    const auto b = BatteryParams::from_rating(500.0, 2.2, 0.2, 0.5, 0.9);
    EXPECT_DOUBLE_EQ(b.e_max, 1100.0);
    EXPECT_DOUBLE_EQ(b.e_min, 220.0);
    EXPECT_DOUBLE_EQ(b.e0, 550.0);
    auto bad = b;
    bad.eta = 1.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = b;
    bad.e0 = 100.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_NO_THROW(BatteryParams{}.validate());
    EXPECT_TRUE(BatteryParams{}.disabled());
}

TEST(Cycles, Definition) {
    const auto b = params();
    const std::size_t steps = 365 * 24;
    DispatchSchedule s = DispatchSchedule::idle(std::vector<double>(steps, 0.0), 1.0, b.e0);
    EXPECT_DOUBLE_EQ(annual_cycles(s, b), 0.0);
    s.discharge[10] = b.e_max;
    EXPECT_NEAR(annual_cycles(s, b), 1.0, 1e-12);
    for (std::size_t day = 0; day < 365; ++day) s.discharge[day * 24 + 10] = b.e_max;
    EXPECT_NEAR(annual_cycles(s, b), 365.0, 1e-9);
    // half a year of the same daily pattern scales to a full year
    DispatchSchedule half = DispatchSchedule::idle(std::vector<double>(steps / 2, 0.0), 1.0, b.e0);
    for (std::size_t day = 0; day < 182; ++day) half.discharge[day * 24 + 10] = b.e_max;
    EXPECT_NEAR(annual_cycles(half, b), 182.0 * 365.0 / 182.5, 1e-9);
}

} // namespace
