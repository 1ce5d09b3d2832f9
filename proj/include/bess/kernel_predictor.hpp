#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bess/errors.hpp"
#include "bess/hindsight.hpp"
#include "bess/parallel.hpp"
#include "bess/time_series.hpp"

namespace bess {

/// lookback is the demand window length in steps; sigma is in kW.
struct KernelConfig {
    std::size_t lookback = 288;
    double sigma = 100.0;
    std::size_t k = 25;
    double alpha = 0.9;

    void validate() const {
        if (lookback < 1) throw ConfigError("kernel: lookback must be >= 1");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("kernel: sigma must be > 0");
        if (k < 1) throw ConfigError("kernel: k must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("kernel: alpha must lie in (0, 1)");
    }

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

/// A query point: the trailing demand window (oldest first) plus the
/// time-of-day encoding of its last step.
struct FeatureView {
    std::span<const double> window;
    double t_sin = 0.0;
    double t_cos = 1.0;
};

struct Neighbor {
    std::uint32_t entry = 0;
    double distance_sq = 0.0;
    double weight = 0.0;
};

/// Neighbors in ascending (distance, entry) order with normalised weights.
struct NeighborSet {
    std::vector<Neighbor> items;
    std::size_t size() const { return items.size(); }
};

/// Squared Euclidean distance accumulated as window terms, then sine, then
/// cosine. Returns a value > `abandon_above` as soon as the partial sum
/// exceeds it (the exact value is then irrelevant to the caller).
inline double feature_distance_sq(const FeatureView& a, std::span<const double> b_window, double b_sin, double b_cos,
                                  double abandon_above = std::numeric_limits<double>::infinity()) {
    double sum = 0.0;
    const std::size_t n = a.window.size();
    std::size_t i = 0;
    constexpr std::size_t kChunk = 16;
    while (i < n) {
        const std::size_t end = std::min(n, i + kChunk);
        for (; i < end; ++i) {
            const double diff = a.window[i] - b_window[i];
            sum += diff * diff;
        }
        if (sum > abandon_above) return sum;
    }
    const double ds = a.t_sin - b_sin;
    sum += ds * ds;
    const double dc = a.t_cos - b_cos;
    sum += dc * dc;
    return sum;
}

/// Gaussian kernel weights exp(-d^2 / (2 W sigma^2)), normalised to sum to
/// one. Shifting by the smallest distance avoids underflow when every
/// neighbor is far away.
inline void assign_kernel_weights(NeighborSet& set, std::size_t lookback, double sigma) {
    if (set.items.empty()) return;
    double dmin = set.items.front().distance_sq;
    for (const auto& n : set.items) dmin = std::min(dmin, n.distance_sq);
    const double scale = 1.0 / (2.0 * static_cast<double>(lookback) * sigma * sigma);
    double total = 0.0;
    for (auto& n : set.items) {
        n.weight = std::exp(-(n.distance_sq - dmin) * scale);
        total += n.weight;
    }
    for (auto& n : set.items) n.weight /= total;
}

/// Weighted alpha-quantile with linear interpolation between sorted
/// neighbor values: find the first k whose cumulative weight reaches alpha
/// and interpolate towards the previous value. Equal values are pooled
/// into one support point first, so the result does not depend on the
/// order of ties. Below the first cumulative weight the smallest value is
/// returned.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights, double alpha) {
    const std::size_t n = values.size();
    if (n == 0 || weights.size() != n) throw std::invalid_argument("weighted_quantile: size mismatch");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::pair<double, long double>> support;
    support.reserve(n);
    for (auto i : order) {
        if (!support.empty() && support.back().first == values[i]) {
            support.back().second += weights[i];
        } else {
            support.emplace_back(values[i], weights[i]);
        }
    }
    // extended precision keeps narrow interpolation spans accurate
    long double cum = 0.0L;
    const long double a = alpha;
    for (std::size_t r = 0; r < support.size(); ++r) {
        const long double prev_cum = cum;
        cum += support[r].second;
        if (cum >= a || r + 1 == support.size()) {
            const long double value = support[r].first;
            if (r == 0) return support[r].first;
            const long double span = cum - prev_cum;
            if (span <= 0.0L) return support[r].first;
            return static_cast<double>(value + (a - cum) / span * (value - support[r - 1].first));
        }
    }
    return support.back().first;
}

inline double predict_soc_reserve(const NeighborSet& neighbors, std::span<const double> target_e, double alpha) {
    std::vector<double> values, weights;
    values.reserve(neighbors.size());
    weights.reserve(neighbors.size());
    for (const auto& n : neighbors.items) {
        values.push_back(target_e[n.entry]);
        weights.push_back(n.weight);
    }
    return weighted_quantile(values, weights, alpha);
}

inline double predict_peak_target(const NeighborSet& neighbors, std::span<const double> target_p) {
    double value = 0.0;
    for (const auto& n : neighbors.items) value += n.weight * target_p[n.entry];
    return value;
}

// ---------------------------------------------------------------------------
// Training data

/// Training entries over a demand history of N steps: entry j has the
/// window ending at step j + W - 1 and targets taken from step j + W. The
/// history is stored once and windows are views into it.
class TrainingSet {
public:
    TrainingSet() = default;

    TrainingSet(std::shared_ptr<const std::vector<double>> demand, TimeAxis axis, std::vector<double> target_e,
                std::vector<double> target_p, std::size_t lookback)
        : demand_(std::move(demand)), axis_(axis), lookback_(lookback) {
        const std::size_t N = demand_->size();
        if (lookback_ < 1) throw ConfigError("training set: lookback must be >= 1");
        if (N <= lookback_) {
            throw DataError("training set: history of " + std::to_string(N) + " steps is too short for a " +
                            std::to_string(lookback_) + "-step window");
        }
        if (target_e.size() != N || target_p.size() != N) {
            throw DataError("training set: targets and demand history lengths differ");
        }
        const std::size_t count = N - lookback_;
        target_e_.resize(count);
        target_p_.resize(count);
        t_sin_.resize(count);
        t_cos_.resize(count);
        season_.resize(count);
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t end = j + lookback_ - 1;
            target_e_[j] = target_e[end + 1];
            target_p_[j] = target_p[end + 1];
            const auto local = axis_.local(end);
            std::tie(t_sin_[j], t_cos_[j]) = time_of_day_features(local);
            season_[j] = season_of(local);
        }
    }

    std::size_t size() const { return target_e_.size(); }
    std::size_t lookback() const { return lookback_; }
    const TimeAxis& axis() const { return axis_; }
    const std::vector<double>& demand() const { return *demand_; }
    std::shared_ptr<const std::vector<double>> demand_ptr() const { return demand_; }

    std::span<const double> window(std::size_t j) const { return {demand_->data() + j, lookback_}; }
    FeatureView feature(std::size_t j) const { return {window(j), t_sin_[j], t_cos_[j]}; }
    double t_sin(std::size_t j) const { return t_sin_[j]; }
    double t_cos(std::size_t j) const { return t_cos_[j]; }
    SeasonLabel season(std::size_t j) const { return season_[j]; }
    const std::vector<double>& target_e() const { return target_e_; }
    const std::vector<double>& target_p() const { return target_p_; }

    /// Full feature vector [window..., t_sin, t_cos].
    std::vector<double> feature_vector(std::size_t j) const {
        std::vector<double> out(window(j).begin(), window(j).end());
        out.push_back(t_sin_[j]);
        out.push_back(t_cos_[j]);
        return out;
    }

private:
    std::shared_ptr<const std::vector<double>> demand_;
    TimeAxis axis_;
    std::size_t lookback_ = 0;
    std::vector<double> target_e_;
    std::vector<double> target_p_;
    std::vector<double> t_sin_;
    std::vector<double> t_cos_;
    std::vector<SeasonLabel> season_;
};

inline TrainingSet build_training_set(const DemandSeries& demand_hist, const HindsightTargets& targets,
                                      std::size_t lookback) {
    if (targets.size() != demand_hist.size()) {
        throw DataError("training set: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(demand_hist.size()) + " demand steps");
    }
    return TrainingSet(std::make_shared<const std::vector<double>>(demand_hist.data()), demand_hist.axis(),
                       targets.e_hist, targets.p_hist, lookback);
}

// ---------------------------------------------------------------------------
// Neighbor search

namespace detail {

/// Bounded max-heap on (distance, entry): keeps the k lexicographically
/// smallest pairs seen.
class BestK {
public:
    explicit BestK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    bool full() const { return heap_.size() == k_; }
    double worst() const { return full() ? heap_.front().first : std::numeric_limits<double>::infinity(); }

    /// Candidates strictly worse than this threshold can never enter.
    double admit_limit() const { return worst(); }

    void offer(double distance, std::uint32_t entry) {
        const std::pair<double, std::uint32_t> item{distance, entry};
        if (!full()) {
            heap_.push_back(item);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (item < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = item;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    NeighborSet sorted() && {
        std::sort(heap_.begin(), heap_.end());
        NeighborSet set;
        set.items.reserve(heap_.size());
        for (const auto& [d, e] : heap_) set.items.push_back({e, d, 0.0});
        return set;
    }

private:
    std::size_t k_;
    std::vector<std::pair<double, std::uint32_t>> heap_;
};

} // namespace detail

/// Exact K-nearest-neighbor search within same-season pools. Entries are
/// ordered by window sum; since |sum(a) - sum(b)|^2 / W <= |a - b|^2, the
/// search walks outward from the query's sum and stops once that bound
/// exceeds the current K-th distance. Results equal a full linear scan,
/// ties going to the earlier entry.
class NeighborIndex {
public:
    NeighborIndex() = default;

    explicit NeighborIndex(std::shared_ptr<const TrainingSet> training) : training_(std::move(training)) {
        const auto& ts = *training_;
        const std::size_t W = ts.lookback();
        const auto& hist = ts.demand();
        std::vector<double> prefix(hist.size() + 1, 0.0);
        for (std::size_t i = 0; i < hist.size(); ++i) prefix[i + 1] = prefix[i] + hist[i];
        for (std::size_t j = 0; j < ts.size(); ++j) {
            auto& pool = pools_[static_cast<int>(ts.season(j))];
            pool.entries.push_back(static_cast<std::uint32_t>(j));
            pool.sums.push_back(prefix[j + W] - prefix[j]);
        }
        const std::size_t segments = std::min<std::size_t>(kSegments, W);
        seg_bounds_.resize(segments + 1);
        for (std::size_t s = 0; s <= segments; ++s) seg_bounds_[s] = s * W / segments;
        seg_sums_.resize(ts.size() * segments);
        for (std::size_t j = 0; j < ts.size(); ++j) {
            for (std::size_t s = 0; s < segments; ++s) {
                double acc = 0.0;
                for (std::size_t i = seg_bounds_[s]; i < seg_bounds_[s + 1]; ++i) acc += hist[j + i];
                seg_sums_[j * segments + s] = acc;
            }
        }
        for (auto& pool : pools_) {
            std::vector<std::size_t> order(pool.entries.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return pool.sums[a] < pool.sums[b]; });
            Pool sorted;
            for (auto o : order) {
                sorted.entries.push_back(pool.entries[o]);
                sorted.sums.push_back(pool.sums[o]);
            }
            pool = std::move(sorted);
        }
    }

    const TrainingSet& training() const { return *training_; }
    std::shared_ptr<const TrainingSet> training_ptr() const { return training_; }

    std::size_t pool_size(SeasonLabel season) const { return pools_[static_cast<int>(season)].entries.size(); }

    NeighborSet query(const FeatureView& q, SeasonLabel season, std::size_t k) const {
        const auto& pool = pools_[static_cast<int>(season)];
        check_query(q, season, k);
        const auto& ts = *training_;
        const double W = static_cast<double>(ts.lookback());
        double qsum = 0.0;
        for (double v : q.window) qsum += v;

        detail::BestK best(k);
        const std::size_t n = pool.entries.size();
        std::size_t hi = static_cast<std::size_t>(std::lower_bound(pool.sums.begin(), pool.sums.end(), qsum) -
                                                  pool.sums.begin());
        std::size_t lo = hi;
        auto bound = [&](std::size_t pos) {
            const double ds = pool.sums[pos] - qsum;
            return ds * ds / W;
        };
        const std::size_t segments = seg_bounds_.size() - 1;
        std::vector<double> q_seg(segments, 0.0);
        std::vector<double> inv_len(segments);
        for (std::size_t s = 0; s < segments; ++s) {
            for (std::size_t i = seg_bounds_[s]; i < seg_bounds_[s + 1]; ++i) q_seg[s] += q.window[i];
            inv_len[s] = 1.0 / static_cast<double>(seg_bounds_[s + 1] - seg_bounds_[s]);
        }
        auto visit = [&](std::size_t pos) {
            const std::uint32_t e = pool.entries[pos];
            if (best.full()) {
                const double* seg = seg_sums_.data() + static_cast<std::size_t>(e) * segments;
                double lb = 0.0;
                for (std::size_t s = 0; s < segments; ++s) {
                    const double ds = seg[s] - q_seg[s];
                    lb += ds * ds * inv_len[s];
                }
                if (lb * (1.0 - 1e-6) - 1e-6 > best.worst()) return;
            }
            const double d = feature_distance_sq(q, ts.window(e), ts.t_sin(e), ts.t_cos(e), best.admit_limit());
            best.offer(d, e);
        };
        // Relative margin guards the bound against rounding in the sums.
        auto prunable = [&](double lb) { return best.full() && lb * (1.0 - 1e-9) - 1e-9 > best.worst(); };
        while (lo > 0 || hi < n) {
            const double lb_lo = lo > 0 ? bound(lo - 1) : std::numeric_limits<double>::infinity();
            const double lb_hi = hi < n ? bound(hi) : std::numeric_limits<double>::infinity();
            if (prunable(std::min(lb_lo, lb_hi))) break;
            if (lb_lo <= lb_hi) {
                visit(--lo);
            } else {
                visit(hi++);
            }
        }
        return std::move(best).sorted();
    }

    /// Reference linear scan over the whole pool.
    NeighborSet query_scan(const FeatureView& q, SeasonLabel season, std::size_t k) const {
        const auto& pool = pools_[static_cast<int>(season)];
        check_query(q, season, k);
        const auto& ts = *training_;
        detail::BestK best(k);
        for (auto e : pool.entries) {
            best.offer(feature_distance_sq(q, ts.window(e), ts.t_sin(e), ts.t_cos(e)), e);
        }
        return std::move(best).sorted();
    }

private:
    struct Pool {
        std::vector<std::uint32_t> entries;
        std::vector<double> sums;
    };

    void check_query(const FeatureView& q, SeasonLabel season, std::size_t k) const {
        if (!training_) throw ConfigError("neighbor index is empty");
        if (q.window.size() != training_->lookback()) {
            throw DataError("query window has " + std::to_string(q.window.size()) + " steps, model expects " +
                            std::to_string(training_->lookback()));
        }
        const std::size_t available = pools_[static_cast<int>(season)].entries.size();
        if (available < k) {
            throw ConfigError("kernel: " + std::string(to_string(season)) + " training pool has " +
                              std::to_string(available) + " entries, fewer than K = " + std::to_string(k));
        }
    }

    static constexpr std::size_t kSegments = 16;

    std::shared_ptr<const TrainingSet> training_;
    Pool pools_[2];
    std::vector<std::size_t> seg_bounds_;
    std::vector<double> seg_sums_;
};

// ---------------------------------------------------------------------------
// Prediction

struct Prediction {
    double soc_reserve = 0.0;
    double peak_target = 0.0;
};

/// Trained predictor: training entries, their neighbor index and the
/// kernel settings.
class KernelModel {
public:
    KernelModel() = default;

    KernelModel(std::shared_ptr<const NeighborIndex> index, KernelConfig config)
        : index_(std::move(index)), config_(config) {
        config_.validate();
        if (config_.lookback != index_->training().lookback()) {
            throw ConfigError("kernel: config lookback differs from the training windows");
        }
    }

    static KernelModel train(const DemandSeries& demand_hist, const HindsightTargets& targets,
                             const KernelConfig& config) {
        config.validate();
        auto ts = std::make_shared<const TrainingSet>(build_training_set(demand_hist, targets, config.lookback));
        return KernelModel(std::make_shared<const NeighborIndex>(ts), config);
    }

    const KernelConfig& config() const { return config_; }
    const NeighborIndex& index() const { return *index_; }
    std::shared_ptr<const NeighborIndex> index_ptr() const { return index_; }
    const TrainingSet& training() const { return index_->training(); }

    NeighborSet neighbors(const FeatureView& q, SeasonLabel season) const {
        auto set = index_->query(q, season, config_.k);
        assign_kernel_weights(set, config_.lookback, config_.sigma);
        return set;
    }

    Prediction predict(const FeatureView& q, SeasonLabel season) const {
        const auto set = neighbors(q, season);
        return {predict_soc_reserve(set, training().target_e(), config_.alpha),
                predict_peak_target(set, training().target_p())};
    }

private:
    std::shared_ptr<const NeighborIndex> index_;
    KernelConfig config_;
};

/// Demand windows for every step of a test period. Steps before the first
/// full window borrow from `prefix` (history immediately preceding the
/// period) when it is long enough, otherwise they reuse the earliest full
/// window of the period.
class QueryWindows {
public:
    QueryWindows(std::span<const double> demand, std::span<const double> prefix, std::size_t lookback)
        : lookback_(lookback) {
        if (demand.size() < lookback && prefix.size() + demand.size() < lookback) {
            throw DataError("test period shorter than the look-back window");
        }
        const std::size_t borrow = std::min(prefix.size(), lookback - 1);
        offset_ = borrow;
        buffer_.assign(prefix.end() - static_cast<std::ptrdiff_t>(borrow), prefix.end());
        buffer_.insert(buffer_.end(), demand.begin(), demand.end());
    }

    std::span<const double> window(std::size_t t) const {
        const std::size_t end = t + offset_ + 1;
        const std::size_t start = end >= lookback_ ? end - lookback_ : 0;
        return {buffer_.data() + start, lookback_};
    }

private:
    std::size_t lookback_;
    std::size_t offset_ = 0;
    std::vector<double> buffer_;
};

/// Neighbors for every step of a test period, computed once so that
/// several kernel widths, neighbor counts and battery sizes can reuse them.
struct NeighborTable {
    std::size_t k = 0;
    std::vector<NeighborSet> steps;
};

inline NeighborTable precompute_neighbors(const NeighborIndex& index, const DemandSeries& test,
                                          std::span<const double> prefix, std::size_t k, unsigned jobs) {
    const std::size_t W = index.training().lookback();
    const QueryWindows windows(test.values(), prefix, W);
    const auto features = calendar_features(test);
    NeighborTable table;
    table.k = k;
    table.steps.resize(test.size());
    parallel_for(test.size(), jobs, [&](std::size_t t) {
        const FeatureView q{windows.window(t), features.t_sin[t], features.t_cos[t]};
        table.steps[t] = index.query(q, season_of(test.axis().local(t)), k);
    });
    return table;
}

/// Predictions for a test period from a neighbor table, using the first
/// config.k neighbors of each step and the given target arrays.
inline std::vector<Prediction> predict_from_table(const NeighborTable& table, const KernelConfig& config,
                                                  std::span<const double> target_e, std::span<const double> target_p) {
    if (config.k > table.k) throw ConfigError("kernel: K exceeds the precomputed neighbor count");
    std::vector<Prediction> out(table.steps.size());
    for (std::size_t t = 0; t < table.steps.size(); ++t) {
        NeighborSet set;
        set.items.assign(table.steps[t].items.begin(),
                         table.steps[t].items.begin() + static_cast<std::ptrdiff_t>(config.k));
        assign_kernel_weights(set, config.lookback, config.sigma);
        out[t] = {predict_soc_reserve(set, target_e, config.alpha), predict_peak_target(set, target_p)};
    }
    return out;
}

} // namespace bess
