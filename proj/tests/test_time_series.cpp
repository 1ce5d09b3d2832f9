#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "bess/time_series.hpp"

using namespace bess;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bess_ts_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        std::ofstream(path) << content;
        return path;
    }

    fs::path dir_;
};

TEST_F(TempDir, LoadsUniformSeries) {
    const auto path = write("d.csv", "timestamp,value\n2024-01-01T00:00,100\n2024-01-01T00:05,110\n2024-01-01T00:10,105\n");
    const auto s = load_demand(path);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.axis().step_minutes, 5);
    EXPECT_DOUBLE_EQ(s[0], 100.0);
    EXPECT_DOUBLE_EQ(s[1], 110.0);
    EXPECT_DOUBLE_EQ(s[2], 105.0);
    EXPECT_EQ(s.interpolated_steps(), 0u);
}

TEST_F(TempDir, FillsSingleMissingStep) {
    const auto path = write("d.csv", "timestamp,value\n2024-01-01T00:00,100\n2024-01-01T00:10,120\n");
    const auto s = load_demand(path, LoadOptions{5});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s[1], 110.0);
    EXPECT_EQ(s.interpolated_steps(), 1u);
}

TEST_F(TempDir, RejectsLongerGap) {
    const auto path = write("d.csv", "timestamp,value\n2024-01-01T00:00,100\n2024-01-01T00:20,120\n");
    EXPECT_THROW(load_demand(path, LoadOptions{5}), StructuralError);
}

TEST_F(TempDir, RejectsOffGridSpacing) {
    const auto path =
        write("d.csv", "timestamp,value\n2024-01-01T00:00,1\n2024-01-01T00:05,1\n2024-01-01T00:12,1\n");
    EXPECT_THROW(load_demand(path), StructuralError);
}

TEST_F(TempDir, MalformedRowReportsLine) {
    const auto path = write("d.csv", "timestamp,value\n2024-01-01T00:00,1\n2024-01-01T00:05,abc\n");
    try {
        load_demand(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST_F(TempDir, RejectsNegativeDemandButAllowsNegativePrice) {
    const auto path = write("d.csv", "timestamp,value\n2024-01-01T00:00,-1\n2024-01-01T00:05,2\n");
    EXPECT_THROW(load_demand(path), DataError);
    EXPECT_NO_THROW(load_prices(path));
}

TEST_F(TempDir, MissingFileIsDataError) { EXPECT_THROW(load_demand(dir_ / "nope.csv"), DataError); }

TEST_F(TempDir, RoundTripIsBitExact) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2000.0);
    std::vector<double> values(500);
    for (auto& v : values) v = u(rng);
    TimeAxis axis;
    axis.start = std::chrono::sys_days{std::chrono::year{2023} / 6 / 30} + std::chrono::hours{22};
    axis.step_minutes = 5;
    axis.utc_offset = std::chrono::minutes{-300};
    const DemandSeries original(axis, values);
    write_series(dir_ / "rt.csv", original);
    const auto loaded = load_demand(dir_ / "rt.csv");
    EXPECT_EQ(loaded.axis(), original.axis());
    ASSERT_EQ(loaded.size(), original.size());
    for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(loaded[i], values[i]);
}

TEST(Timestamps, ParsesOffsetsAndNaive) {
    const auto a = parse_timestamp("2024-07-01T12:00:00-04:00");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->utc_offset, std::chrono::minutes{-240});
    const auto b = parse_timestamp("2024-07-01 16:00");
    ASSERT_TRUE(b);
    EXPECT_FALSE(b->utc_offset);
    EXPECT_EQ(a->instant, b->instant);
    EXPECT_FALSE(parse_timestamp("2024-13-01T00:00"));
    EXPECT_FALSE(parse_timestamp("garbage"));
}

TimeAxis axis_at(int y, unsigned m, unsigned d, int step) {
    TimeAxis axis;
    axis.start = std::chrono::sys_days{std::chrono::year{y} / m / d};
    axis.step_minutes = step;
    return axis;
}

TEST(Align, ForwardFillsHourlyPrices) {
    const DemandSeries demand(axis_at(2024, 1, 1, 5), std::vector<double>(12, 100.0));
    const PriceSeries price(axis_at(2024, 1, 1, 60), {0.05});
    const auto [d, p] = align(demand, price);
    ASSERT_EQ(p.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(p[i], 0.05);
    EXPECT_EQ(d.axis(), p.axis());
}

TEST(Align, IdenticalTimingUnchanged) {
    const DemandSeries demand(axis_at(2024, 1, 1, 5), {1.0, 2.0, 3.0});
    const PriceSeries price(axis_at(2024, 1, 1, 5), {0.1, 0.2, 0.3});
    const auto [d, p] = align(demand, price);
    EXPECT_EQ(d.data(), demand.data());
    EXPECT_EQ(p.data(), price.data());
}

TEST(Align, TrimsToOverlapAndPreservesHourlyValues) {
    const DemandSeries demand(axis_at(2024, 1, 1, 5), std::vector<double>(48, 1.0));
    auto paxis = axis_at(2024, 1, 1, 60);
    paxis.start += std::chrono::hours{1};
    const PriceSeries price(paxis, {0.1, 0.2, 0.3});
    const auto [d, p] = align(demand, price);
    ASSERT_EQ(d.size(), 36u);
    EXPECT_EQ(d.axis().start, paxis.start);
    for (std::size_t i = 0; i < 36; ++i) EXPECT_DOUBLE_EQ(p[i], 0.1 * static_cast<double>(i / 12 + 1));
}

TEST(Align, DisjointRangesThrow) {
    const DemandSeries demand(axis_at(2024, 1, 1, 5), {1.0});
    const PriceSeries price(axis_at(2024, 2, 1, 60), {0.1});
    EXPECT_THROW(align(demand, price), AlignmentError);
}

TEST(Align, FinerPriceThrows) {
    const DemandSeries demand(axis_at(2024, 1, 1, 15), {1.0, 1.0});
    const PriceSeries price(axis_at(2024, 1, 1, 5), {0.1, 0.1, 0.1});
    EXPECT_THROW(align(demand, price), AlignmentError);
}

TEST(Season, Boundaries) {
    using namespace std::chrono;
    EXPECT_EQ(season_of(year{2024} / 7 / 15), SeasonLabel::Summer);
    EXPECT_EQ(season_of(year{2024} / 5 / 31), SeasonLabel::NonSummer);
    EXPECT_EQ(season_of(year{2024} / 6 / 1), SeasonLabel::Summer);
    EXPECT_EQ(season_of(year{2024} / 9 / 30), SeasonLabel::Summer);
    EXPECT_EQ(season_of(year{2024} / 10 / 1), SeasonLabel::NonSummer);
}

TEST(Season, EveryDayOfALeapYearLabelledOnce) {
    using namespace std::chrono;
    int summer = 0;
    for (sys_days d = year{2024} / 1 / 1; d < sys_days{year{2025} / 1 / 1}; d += days{1}) {
        if (season_of(year_month_day{d}) == SeasonLabel::Summer) ++summer;
    }
    EXPECT_EQ(summer, 30 + 31 + 31 + 30);
}

TEST(Calendar, QuarterPeriods) {
    const auto f = calendar_features(axis_at(2024, 1, 1, 360), 4);
    EXPECT_NEAR(f.t_sin[0], 0.0, 1e-12);
    EXPECT_NEAR(f.t_cos[0], 1.0, 1e-12);
    EXPECT_NEAR(f.t_sin[1], 1.0, 1e-12);
    EXPECT_NEAR(f.t_cos[1], 0.0, 1e-12);
    EXPECT_NEAR(f.t_sin[3], -1.0, 1e-12);
    EXPECT_NEAR(f.t_cos[3], 0.0, 1e-12);
}

TEST(Calendar, UnitCircleEverywhere) {
    const auto f = calendar_features(axis_at(2024, 1, 1, 5), 288 * 3);
    for (std::size_t i = 0; i < f.t_sin.size(); ++i) {
        EXPECT_NEAR(f.t_sin[i] * f.t_sin[i] + f.t_cos[i] * f.t_cos[i], 1.0, 1e-9);
    }
}

TEST(Calendar, LocalOffsetShiftsDaysAndMonths) {
    auto axis = axis_at(2024, 2, 1, 60);
    axis.utc_offset = std::chrono::minutes{-300};
    const auto months = month_blocks(axis, 24);
    ASSERT_EQ(months.size(), 2u);
    EXPECT_EQ(months[0].size(), 5u);
    EXPECT_EQ(static_cast<unsigned>(months[1].first_day.month()), 2u);
}

} // namespace
