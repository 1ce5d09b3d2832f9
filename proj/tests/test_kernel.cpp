#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bess/kernel_predictor.hpp"
#include "support/quantile_oracle.hpp"

using namespace bess;

namespace {

NeighborSet make_set(const std::vector<double>& weights) {
    NeighborSet set;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        set.items.push_back({static_cast<std::uint32_t>(i), 0.0, weights[i]});
    }
    return set;
}

TimeAxis axis_from(std::chrono::sys_days day, int step = 5) {
    TimeAxis a;
    a.start = sys_seconds{day};
    a.step_minutes = step;
    return a;
}

DemandSeries noisy_demand(std::chrono::sys_days start, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 30.0);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hour = static_cast<double>(i % 288) / 12.0;
        v[i] = std::max(0.0, 500.0 + 200.0 * std::sin(hour / 24.0 * 6.283185307179586) + noise(rng));
    }
    return DemandSeries(axis_from(start), std::move(v));
}

HindsightTargets ramp_targets(const DemandSeries& d) {
    HindsightTargets t;
    t.axis = d.axis();
    for (std::size_t i = 0; i < d.size(); ++i) {
        t.e_hist.push_back(static_cast<double>(i));
        t.p_hist.push_back(1000.0 + static_cast<double>(i));
        t.net_demand.push_back(d[i]);
    }
    return t;
}

constexpr auto kMay25 = std::chrono::sys_days{std::chrono::year{2024} / 5 / 25};

} // namespace

TEST(WeightedQuantile, HandEvaluatedExamples) {
    const std::vector<double> e{1.0, 2.0, 3.0};
    const std::vector<double> w{0.2, 0.3, 0.5};
    EXPECT_NEAR(weighted_quantile(e, w, 0.35), 1.5, 1e-12);
    EXPECT_NEAR(weighted_quantile(e, w, 0.9), 2.8, 1e-12);
}

TEST(WeightedQuantile, SingleNeighborReturnsItsTarget) {
    for (double alpha : {0.01, 0.5, 0.99}) {
        EXPECT_EQ(weighted_quantile(std::vector<double>{42.0}, std::vector<double>{1.0}, alpha), 42.0);
    }
}

TEST(WeightedQuantile, AlphaBelowFirstWeightClampsToSmallest) {
    EXPECT_EQ(weighted_quantile(std::vector<double>{5.0, 1.0, 3.0}, std::vector<double>{0.3, 0.3, 0.4}, 0.1), 1.0);
}

TEST(WeightedQuantile, UnsortedInputIsSortedByValue) {
    const std::vector<double> e{3.0, 1.0, 2.0};
    const std::vector<double> w{0.5, 0.2, 0.3};
    EXPECT_NEAR(weighted_quantile(e, w, 0.35), 1.5, 1e-12);
}

TEST(WeightedQuantile, TiedValuesPoolTheirWeight) {
    const std::vector<double> e{1.0, 3.0, 3.0};
    EXPECT_NEAR(weighted_quantile(e, std::vector<double>{0.2, 0.1, 0.7}, 0.5), 1.75, 1e-12);
    EXPECT_NEAR(weighted_quantile(e, std::vector<double>{0.2, 0.7, 0.1}, 0.5), 1.75, 1e-12);
    EXPECT_EQ(weighted_quantile(std::vector<double>{4.0, 4.0}, std::vector<double>{0.5, 0.5}, 0.9), 4.0);
}

TEST(WeightedQuantile, MatchesBruteForceOracleAndIsMonotone) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(1, 10);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = size(rng);
        std::vector<double> e(K), raw(K);
        double total = 0.0;
        for (int i = 0; i < K; ++i) {
            e[i] = std::floor(unit(rng) * 20.0) * 5.0; // repeated values on purpose
            raw[i] = unit(rng) + 1e-3;
            total += raw[i];
        }
        for (auto& r : raw) r /= total;
        double previous = -1e300;
        for (int a = 1; a < 100; ++a) {
            const double alpha = a / 100.0;
            const double got = weighted_quantile(e, raw, alpha);
            ASSERT_NEAR(got, oracle::weighted_quantile(e, raw, alpha), 1e-12) << "trial " << trial;
            ASSERT_GE(got, previous - 1e-12);
            ASSERT_GE(got, *std::min_element(e.begin(), e.end()) - 1e-12);
            ASSERT_LE(got, *std::max_element(e.begin(), e.end()) + 1e-12);
            previous = got;
        }
    }
}

TEST(KernelWeights, EqualDistancesShareWeight) {
    NeighborSet s;
    s.items = {{0, 4.0, 0.0}, {1, 4.0, 0.0}};
    assign_kernel_weights(s, 12, 3.0);
    EXPECT_NEAR(s.items[0].weight, 0.5, 1e-15);
    EXPECT_NEAR(s.items[1].weight, 0.5, 1e-15);
}

TEST(KernelWeights, HalfKernelNeighbors) {
    const std::size_t W = 24;
    const double sigma = 7.0;
    const double half = 2.0 * W * sigma * sigma * std::log(2.0); // exp(-d2/(2W s^2)) = 1/2
    NeighborSet s;
    s.items = {{0, 0.0, 0.0}, {1, half, 0.0}, {2, half, 0.0}};
    assign_kernel_weights(s, W, sigma);
    EXPECT_NEAR(s.items[0].weight, 0.5, 1e-12);
    EXPECT_NEAR(s.items[1].weight, 0.25, 1e-12);
    EXPECT_NEAR(s.items[2].weight, 0.25, 1e-12);
}

TEST(KernelWeights, DistantNeighborsVanish) {
    const std::size_t W = 48;
    const double sigma = 2.0;
    const double far = std::pow(10.0 * sigma * std::sqrt(static_cast<double>(W)), 2.0);
    NeighborSet s;
    s.items = {{0, 0.0, 0.0}, {1, far, 0.0}, {2, far * 1.5, 0.0}};
    assign_kernel_weights(s, W, sigma);
    EXPECT_GE(s.items[0].weight, 1.0 - 1e-6);
}

TEST(KernelWeights, JointRescalingKeepsWeights) {
    NeighborSet a;
    a.items = {{0, 10.0, 0.0}, {1, 40.0, 0.0}, {2, 90.0, 0.0}};
    NeighborSet b = a;
    for (auto& n : b.items) n.distance_sq *= 9.0; // distances x3
    assign_kernel_weights(a, 10, 2.0);
    assign_kernel_weights(b, 10, 6.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(a.items[i].weight, b.items[i].weight, 1e-14);
        EXPECT_GE(a.items[i].weight, 0.0);
        sum += a.items[i].weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(KernelWeights, FarAwayNeighborsStillNormalise) {
    NeighborSet s;
    s.items = {{0, 1e9, 0.0}, {1, 1e9 + 1.0, 0.0}};
    assign_kernel_weights(s, 1, 0.1);
    EXPECT_TRUE(std::isfinite(s.items[0].weight));
    EXPECT_NEAR(s.items[0].weight + s.items[1].weight, 1.0, 1e-12);
}

TEST(PeakTarget, WeightedAverages) {
    const std::vector<double> constant{950.0, 950.0, 950.0};
    EXPECT_NEAR(predict_peak_target(make_set({0.2, 0.3, 0.5}), constant), 950.0, 1e-12);
    EXPECT_NEAR(predict_peak_target(make_set({0.5, 0.5}), std::vector<double>{900.0, 1000.0}), 950.0, 1e-12);
    EXPECT_NEAR(predict_peak_target(make_set({0.5, 0.25, 0.25}), std::vector<double>{800.0, 1000.0, 1200.0}), 950.0,
                1e-12);
}

TEST(PredictSocReserve, UsesNeighborTargets) {
    NeighborSet s;
    s.items = {{2, 0.0, 0.2}, {0, 0.0, 0.3}, {1, 0.0, 0.5}};
    const std::vector<double> target_e{2.0, 3.0, 1.0};
    EXPECT_NEAR(predict_soc_reserve(s, target_e, 0.35), 1.5, 1e-12);
}

TEST(TrainingSet, EntryCounts) {
    const std::size_t W = 12;
    for (std::size_t extra : {1u, 10u}) {
        const auto d = noisy_demand(kMay25, W + extra, 1);
        const auto ts = build_training_set(d, ramp_targets(d), W);
        EXPECT_EQ(ts.size(), extra);
        EXPECT_EQ(ts.feature_vector(0).size(), W + 2);
    }
}

TEST(TrainingSet, TooShortHistoryIsRejected) {
    const auto d = noisy_demand(kMay25, 12, 1);
    EXPECT_THROW(build_training_set(d, ramp_targets(d), 12), DataError);
}

TEST(TrainingSet, TargetsComeFromTheStepAfterTheWindow) {
    const std::size_t W = 5;
    const auto d = noisy_demand(kMay25, 20, 1);
    const auto ts = build_training_set(d, ramp_targets(d), W);
    for (std::size_t j = 0; j < ts.size(); ++j) {
        EXPECT_EQ(ts.target_e()[j], static_cast<double>(j + W));
        EXPECT_EQ(ts.target_p()[j], 1000.0 + static_cast<double>(j + W));
        EXPECT_EQ(ts.window(j)[0], d[j]);
    }
}

TEST(TrainingSet, ConstantDemandGivesIdenticalWindows) {
    DemandSeries d(axis_from(kMay25), std::vector<double>(40, 1000.0));
    const auto ts = build_training_set(d, ramp_targets(d), 8);
    for (std::size_t j = 1; j < ts.size(); ++j) {
        EXPECT_TRUE(std::equal(ts.window(j).begin(), ts.window(j).end(), ts.window(0).begin()));
    }
}

TEST(TrainingSet, SeasonFollowsWindowEnd) {
    // 31 May 23:55 closes a non-summer window; the next window ends in June.
    const auto start = std::chrono::sys_days{std::chrono::year{2024} / 5 / 31};
    const auto d = noisy_demand(start, 300, 2);
    const auto ts = build_training_set(d, ramp_targets(d), 12);
    const std::size_t last_may = 287 - 11;
    EXPECT_EQ(ts.season(last_may), SeasonLabel::NonSummer);
    EXPECT_EQ(ts.season(last_may + 1), SeasonLabel::Summer);
}

TEST(NeighborIndex, PrunedQueryMatchesLinearScan) {
    const auto hist = noisy_demand(kMay25, 288 * 14, 5); // straddles the season change
    auto ts = std::make_shared<const TrainingSet>(build_training_set(hist, ramp_targets(hist), 36));
    const NeighborIndex index(ts);
    const auto probe = noisy_demand(kMay25 + std::chrono::days{30}, 288 * 2, 6);
    const auto features = calendar_features(probe);
    const QueryWindows windows(probe.values(), {}, 36);
    for (std::size_t t = 0; t < probe.size(); t += 7) {
        const FeatureView q{windows.window(t), features.t_sin[t], features.t_cos[t]};
        for (auto season : {SeasonLabel::Summer, SeasonLabel::NonSummer}) {
            const auto fast = index.query(q, season, 10);
            const auto slow = index.query_scan(q, season, 10);
            ASSERT_EQ(fast.size(), slow.size());
            for (std::size_t i = 0; i < fast.size(); ++i) {
                ASSERT_EQ(fast.items[i].entry, slow.items[i].entry) << "step " << t;
                ASSERT_EQ(fast.items[i].distance_sq, slow.items[i].distance_sq);
            }
        }
    }
}

TEST(NeighborIndex, TiesPreferEarlierEntries) {
    DemandSeries d(axis_from(kMay25 - std::chrono::days{10}), std::vector<double>(288, 700.0));
    auto ts = std::make_shared<const TrainingSet>(build_training_set(d, ramp_targets(d), 288 - 30));
    const NeighborIndex index(ts);
    // Features only differ through time of day; query a window with the
    // time-of-day of entry 0 so entry 0 is at distance zero.
    const FeatureView q{ts->window(5), ts->t_sin(0), ts->t_cos(0)};
    const auto set = index.query(q, SeasonLabel::NonSummer, 3);
    EXPECT_EQ(set.items[0].entry, 0u);
    for (std::size_t i = 1; i < set.size(); ++i) {
        EXPECT_LE(set.items[i - 1].distance_sq, set.items[i].distance_sq);
    }
}

TEST(NeighborIndex, PoolSmallerThanKIsAConfigError) {
    const auto d = noisy_demand(kMay25 - std::chrono::days{5}, 40, 3); // non-summer only
    auto ts = std::make_shared<const TrainingSet>(build_training_set(d, ramp_targets(d), 10));
    const NeighborIndex index(ts);
    const FeatureView q{ts->window(0), ts->t_sin(0), ts->t_cos(0)};
    EXPECT_THROW(index.query(q, SeasonLabel::Summer, 1), ConfigError);
    EXPECT_THROW(index.query(q, SeasonLabel::NonSummer, 31), ConfigError);
    EXPECT_NO_THROW(index.query(q, SeasonLabel::NonSummer, 30));
}

TEST(KernelModel, SelfNeighborReplayReturnsTrueTarget) {
    const auto hist = noisy_demand(kMay25 - std::chrono::days{20}, 288 * 4, 8);
    KernelConfig cfg;
    cfg.lookback = 24;
    cfg.k = 1;
    cfg.alpha = 0.5;
    const auto model = KernelModel::train(hist, ramp_targets(hist), cfg);
    for (std::size_t j : {0u, 100u, 700u}) {
        const auto pred = model.predict(model.training().feature(j), model.training().season(j));
        EXPECT_EQ(pred.soc_reserve, static_cast<double>(j + 24));
        EXPECT_EQ(pred.peak_target, 1000.0 + static_cast<double>(j + 24));
    }
}

TEST(KernelModel, TablePredictionsMatchDirectQueries) {
    const auto hist = noisy_demand(kMay25 - std::chrono::days{20}, 288 * 6, 9);
    const auto test = noisy_demand(kMay25 - std::chrono::days{14}, 288, 10);
    KernelConfig cfg;
    cfg.lookback = 48;
    cfg.k = 5;
    cfg.sigma = 50.0;
    const auto model = KernelModel::train(hist, ramp_targets(hist), cfg);
    const auto table = precompute_neighbors(model.index(), test, hist.values(), 8, 2);
    const auto preds = predict_from_table(table, cfg, model.training().target_e(), model.training().target_p());
    const QueryWindows windows(test.values(), hist.values(), 48);
    const auto features = calendar_features(test);
    for (std::size_t t = 0; t < test.size(); t += 13) {
        const FeatureView q{windows.window(t), features.t_sin[t], features.t_cos[t]};
        const auto direct = model.predict(q, season_of(test.axis().local(t)));
        EXPECT_DOUBLE_EQ(preds[t].soc_reserve, direct.soc_reserve);
        EXPECT_DOUBLE_EQ(preds[t].peak_target, direct.peak_target);
    }
    KernelConfig too_many = cfg;
    too_many.k = 9;
    EXPECT_THROW(predict_from_table(table, too_many, model.training().target_e(), model.training().target_p()),
                 ConfigError);
}

TEST(QueryWindows, EarlyStepsBorrowHistoryOrReuseFirstWindow) {
    const std::vector<double> prefix{1, 2, 3, 4};
    const std::vector<double> test{10, 11, 12, 13, 14};
    const QueryWindows with(test, prefix, 3);
    EXPECT_EQ(std::vector<double>(with.window(0).begin(), with.window(0).end()), (std::vector<double>{3, 4, 10}));
    EXPECT_EQ(std::vector<double>(with.window(4).begin(), with.window(4).end()), (std::vector<double>{12, 13, 14}));
    const QueryWindows without(test, {}, 3);
    EXPECT_EQ(std::vector<double>(without.window(0).begin(), without.window(0).end()),
              (std::vector<double>{10, 11, 12}));
    EXPECT_EQ(std::vector<double>(without.window(2).begin(), without.window(2).end()),
              (std::vector<double>{10, 11, 12}));
}

TEST(KernelConfig, Validation) {
    KernelConfig c;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.sigma = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.k = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.lookback = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}
