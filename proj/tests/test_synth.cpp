#include <gtest/gtest.h>

#include <cmath>

#include "bess/synth.hpp"

using namespace bess;

namespace {

template <class Series>
std::vector<double> values_of(const Series& s) {
    return {s.values().begin(), s.values().end()};
}

} // namespace

TEST(SynthDemand, SameSeedSameSeries) {
    SynthDemandOptions o;
    o.days = 20;
    EXPECT_EQ(values_of(synth_demand(o)), values_of(synth_demand(o)));
    auto other = o;
    other.seed = 2;
    EXPECT_NE(values_of(synth_demand(o)), values_of(synth_demand(other)));
}

TEST(SynthDemand, NoiselessProfileRepeatsWeekly) {
    SynthDemandOptions o;
    o.days = 21;
    o.noise = 0.0;
    o.seasonal_amplitude = 0.0;
    const auto d = synth_demand(o);
    const std::size_t week = 7 * 288;
    for (std::size_t i = 0; i + week < d.size(); ++i) ASSERT_NEAR(d[i], d[i + week], 1e-9);
}

TEST(SynthDemand, MomentsMatchRequest) {
    SynthDemandOptions o;
    o.mean_kw = 800.0;
    o.std_kw = 150.0;
    const auto d = synth_demand(o);
    double mean = 0.0;
    for (double x : d.values()) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double x : d.values()) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(d.size()));
    EXPECT_NEAR(mean, 800.0, 0.1 * 800.0);
    EXPECT_NEAR(sd, 150.0, 0.1 * 150.0);
    for (double x : d.values()) ASSERT_GE(x, 0.0);
    EXPECT_EQ(d.size(), 365u * 288u);
}

TEST(SynthPrices, PositiveHourlyAndDeterministic) {
    SynthPriceOptions o;
    o.days = 30;
    const auto p = synth_prices(o);
    EXPECT_EQ(p.size(), 30u * 24u);
    EXPECT_EQ(p.axis().step_minutes, 60);
    for (double x : p.values()) ASSERT_GT(x, 0.0);
    EXPECT_EQ(values_of(p), values_of(synth_prices(o)));
}

TEST(Synth, RejectsEmptyHorizon) {
    SynthDemandOptions d;
    d.days = 0;
    EXPECT_THROW(synth_demand(d), ConfigError);
    SynthPriceOptions p;
    p.days = 0;
    EXPECT_THROW(synth_prices(p), ConfigError);
}
