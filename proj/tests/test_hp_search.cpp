#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "bess/hp_search.hpp"

using namespace bess;

namespace {

SearchSpec single_point() {
    SearchSpec s;
    s.lookback_grid = {144};
    s.sigma_grid = {10.0};
    s.k_grid = {25};
    s.start.lookback = 144;
    s.start.sigma = 10.0;
    s.start.k = 25;
    return s;
}

} // namespace

TEST(RefineAround, StaysWithinNeighbouringCells) {
    const auto v = detail::refine_around(std::vector<double>{1, 10, 100}, 10.0, 2);
    EXPECT_EQ(v.front(), 1.0);
    EXPECT_EQ(v.back(), 100.0);
    EXPECT_EQ(v.size(), 7u);
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    const auto edge = detail::refine_around(std::vector<double>{1, 10, 100}, 100.0, 1);
    EXPECT_EQ(edge, (std::vector<double>{10, 55, 100}));
    const auto counts = detail::refine_around(std::vector<std::size_t>{5, 10}, 5, 2);
    EXPECT_EQ(counts.front(), 5u);
    EXPECT_EQ(counts.back(), 10u);
}

TEST(Tune, SinglePointGridsVisitEachStageOnce) {
    std::atomic<int> calls{0};
    const auto result = tune(single_point(), [&](const KernelConfig&) {
        ++calls;
        return TrialOutcome{1.0, 0.0};
    });
    EXPECT_EQ(result.trace.size(), 3u);
    EXPECT_EQ(result.evaluations, 1u);
    EXPECT_EQ(calls.load(), 1);
    EXPECT_EQ(result.best.lookback, 144u);
    EXPECT_EQ(result.best.k, 25u);
}

TEST(Tune, ConstantObjectivePrefersSmallestValues) {
    const auto result = tune(SearchSpec{}, [](const KernelConfig&) { return TrialOutcome{5.0, 0.0}; }, 4);
    EXPECT_EQ(result.best.lookback, 72u);
    EXPECT_EQ(result.best.sigma, 1.0);
    EXPECT_EQ(result.best.k, 5u);
}

TEST(Tune, RecoversPlantedOptimum) {
    auto evaluate = [](const KernelConfig& c) {
        const double w = std::log(static_cast<double>(c.lookback) / 288.0);
        const double s = std::log10(c.sigma / 100.0);
        const double k = (static_cast<double>(c.k) - 25.0) / 25.0;
        return TrialOutcome{100.0 - w * w - s * s - k * k, 0.0};
    };
    const auto result = tune(SearchSpec{}, evaluate, 3);
    EXPECT_EQ(result.best.lookback, 288u);
    EXPECT_EQ(result.best.sigma, 100.0);
    EXPECT_EQ(result.best.k, 25u);
    for (const auto& r : result.trace) EXPECT_LE(r.objective, result.best_objective);
    EXPECT_LT(result.evaluations, result.trace.size());
}

TEST(Tune, CycleWeightPenalisesCycling) {
    auto spec = single_point();
    spec.k_grid = {5, 50};
    spec.refine = false;
    spec.cycle_weight = 1.0;
    spec.start.k = 5;
    const auto result = tune(spec, [](const KernelConfig& c) {
        return c.k == 5 ? TrialOutcome{10.0, 8.0} : TrialOutcome{9.0, 1.0};
    });
    EXPECT_EQ(result.best.k, 50u);
    EXPECT_DOUBLE_EQ(result.best_objective, 8.0);
}

TEST(Tune, InvalidGridsAreRejected) {
    auto spec = single_point();
    spec.sigma_grid = {};
    EXPECT_THROW(tune(spec, [](const KernelConfig&) { return TrialOutcome{}; }), ConfigError);
    spec = single_point();
    spec.k_grid = {0};
    EXPECT_THROW(tune(spec, [](const KernelConfig&) { return TrialOutcome{}; }), ConfigError);
}
