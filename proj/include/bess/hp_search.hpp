#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "bess/arbitrage_policy.hpp"
#include "bess/backtest.hpp"
#include "bess/controller.hpp"
#include "bess/errors.hpp"
#include "bess/hindsight.hpp"
#include "bess/kernel_predictor.hpp"
#include "bess/parallel.hpp"
#include "bess/tariff.hpp"

namespace bess {

struct SearchSpec {
    /// Look-back windows in steps (6 h, 12 h, 24 h, 48 h at 5 minutes).
    std::vector<std::size_t> lookback_grid{72, 144, 288, 576};
    /// Kernel widths in kW, log-spaced.
    std::vector<double> sigma_grid{1.0, 10.0, 100.0, 1000.0};
    std::vector<std::size_t> k_grid{5, 10, 25, 50, 100};
    /// Linear refinement around each stage's coarse winner.
    bool refine = true;
    /// Points inserted on each side of the winner, inside one coarse cell.
    std::size_t refine_points = 2;
    /// Weight on annual cycles in the objective (savings - weight * cycles).
    double cycle_weight = 0.0;
    /// sigma, K and alpha used before their own stage has run.
    KernelConfig start;

    void validate() const {
        if (lookback_grid.empty() || sigma_grid.empty() || k_grid.empty()) {
            throw ConfigError("search: every grid needs at least one value");
        }
        for (auto w : lookback_grid) {
            if (w < 1) throw ConfigError("search: look-back values must be >= 1");
        }
        for (double s : sigma_grid) {
            if (!(s > 0.0)) throw ConfigError("search: sigma values must be > 0");
        }
        for (auto k : k_grid) {
            if (k < 1) throw ConfigError("search: K values must be >= 1");
        }
        start.validate();
    }
};

struct TrialOutcome {
    double savings = 0.0;
    double cycles = 0.0;
};

struct TrialRecord {
    std::string stage;
    KernelConfig config;
    TrialOutcome outcome;
    double objective = 0.0;
    /// Repeated configuration served from the cache.
    bool cached = false;
};

struct SearchResult {
    KernelConfig best;
    double best_objective = 0.0;
    std::vector<TrialRecord> trace;
    /// Distinct configurations actually evaluated.
    std::size_t evaluations = 0;
};

using TrialEvaluator = std::function<TrialOutcome(const KernelConfig&)>;

namespace detail {

/// Coarse grid values inside one cell of `best` on either side, spaced
/// linearly; includes the coarse neighbors and `best` itself.
inline std::vector<double> refine_around(std::vector<double> coarse, double best, std::size_t per_side) {
    std::sort(coarse.begin(), coarse.end());
    coarse.erase(std::unique(coarse.begin(), coarse.end()), coarse.end());
    const auto it = std::lower_bound(coarse.begin(), coarse.end(), best);
    const auto i = static_cast<std::size_t>(it - coarse.begin());
    const double lo = i > 0 ? coarse[i - 1] : best;
    const double hi = i + 1 < coarse.size() ? coarse[i + 1] : best;
    std::vector<double> out;
    for (std::size_t j = 0; j <= per_side + 1; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(per_side + 1);
        out.push_back(lo + (best - lo) * f);
        out.push_back(best + (hi - best) * f);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::size_t> refine_around(const std::vector<std::size_t>& coarse, std::size_t best,
                                              std::size_t per_side) {
    std::vector<double> as_double(coarse.begin(), coarse.end());
    std::vector<std::size_t> out;
    for (double v : refine_around(as_double, static_cast<double>(best), per_side)) {
        out.push_back(static_cast<std::size_t>(std::llround(v)));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline auto config_key(const KernelConfig& c) { return std::make_tuple(c.lookback, c.sigma, c.k, c.alpha); }

/// Better objective wins; equal objectives go to the smaller (W, sigma, K).
inline bool preferred(const TrialRecord& a, const TrialRecord& b) {
    if (a.objective != b.objective) return a.objective > b.objective;
    return std::make_tuple(a.config.lookback, a.config.sigma, a.config.k) <
           std::make_tuple(b.config.lookback, b.config.sigma, b.config.k);
}

class TrialRunner {
public:
    TrialRunner(const TrialEvaluator& evaluate, double cycle_weight, unsigned jobs)
        : evaluate_(evaluate), cycle_weight_(cycle_weight), jobs_(jobs) {}

    /// Evaluate a stage's configurations and return the preferred record.
    TrialRecord stage(const std::string& name, const std::vector<KernelConfig>& configs, SearchResult& result) {
        std::vector<TrialRecord> records(configs.size());
        std::vector<std::size_t> fresh;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            records[i].stage = name;
            records[i].config = configs[i];
            const auto hit = cache_.find(config_key(configs[i]));
            if (hit != cache_.end()) {
                records[i].outcome = hit->second;
                records[i].cached = true;
            } else if (std::none_of(fresh.begin(), fresh.end(), [&](std::size_t j) {
                           return config_key(configs[j]) == config_key(configs[i]);
                       })) {
                fresh.push_back(i);
            } else {
                records[i].cached = true;
            }
        }
        parallel_for(fresh.size(), jobs_, [&](std::size_t n) {
            const std::size_t i = fresh[n];
            records[i].outcome = evaluate_(configs[i]);
        });
        for (auto i : fresh) cache_[config_key(configs[i])] = records[i].outcome;
        result.evaluations += fresh.size();
        for (auto& r : records) {
            if (r.cached) r.outcome = cache_.at(config_key(r.config));
            r.objective = r.outcome.savings - cycle_weight_ * r.outcome.cycles;
            result.trace.push_back(r);
        }
        return *std::min_element(records.begin(), records.end(),
                                 [](const TrialRecord& a, const TrialRecord& b) { return preferred(a, b); });
    }

private:
    const TrialEvaluator& evaluate_;
    double cycle_weight_;
    unsigned jobs_;
    std::map<std::tuple<std::size_t, double, std::size_t, double>, TrialOutcome> cache_;
};

} // namespace detail

/// Sequential tuning: look-back window first (sigma and K held at their
/// start values), then sigma at the chosen window, then K. Each stage runs
/// its coarse grid and, if enabled, a linear refinement around the winner.
inline SearchResult tune(const SearchSpec& spec, const TrialEvaluator& evaluate, unsigned jobs = 1) {
    spec.validate();
    SearchResult result;
    detail::TrialRunner runner(evaluate, spec.cycle_weight, jobs);
    KernelConfig current = spec.start;

    auto pick = [&](const std::string& name, auto grid, auto setter) {
        std::vector<KernelConfig> configs;
        for (auto v : grid) {
            KernelConfig c = current;
            setter(c, v);
            configs.push_back(c);
        }
        return runner.stage(name, configs, result);
    };

    auto set_w = [](KernelConfig& c, std::size_t v) { c.lookback = v; };
    auto set_sigma = [](KernelConfig& c, double v) { c.sigma = v; };
    auto set_k = [](KernelConfig& c, std::size_t v) { c.k = v; };

    auto winner = pick("lookback-coarse", spec.lookback_grid, set_w);
    if (spec.refine && spec.lookback_grid.size() > 1) {
        const auto fine = detail::refine_around(spec.lookback_grid, winner.config.lookback, spec.refine_points);
        const auto r = pick("lookback-fine", fine, set_w);
        if (detail::preferred(r, winner)) winner = r;
    }
    current = winner.config;

    winner = pick("sigma-coarse", spec.sigma_grid, set_sigma);
    if (spec.refine && spec.sigma_grid.size() > 1) {
        const auto fine = detail::refine_around(spec.sigma_grid, winner.config.sigma, spec.refine_points);
        const auto r = pick("sigma-fine", fine, set_sigma);
        if (detail::preferred(r, winner)) winner = r;
    }
    current = winner.config;

    winner = pick("k-coarse", spec.k_grid, set_k);
    if (spec.refine && spec.k_grid.size() > 1) {
        const auto fine = detail::refine_around(spec.k_grid, winner.config.k, spec.refine_points);
        const auto r = pick("k-fine", fine, set_k);
        if (detail::preferred(r, winner)) winner = r;
    }

    const auto best = std::min_element(result.trace.begin(), result.trace.end(), detail::preferred);
    result.best = best->config;
    result.best_objective = best->objective;
    return result;
}

/// Controller savings on a validation period for arbitrary kernel settings.
/// Hindsight targets, the value table and the no-storage bill are computed
/// once; neighbor tables are built on first use of each look-back window
/// with the largest K any trial may ask for.
class ValidationEvaluator {
public:
    ValidationEvaluator(ScenarioData data, BatteryParams battery, TariffSchedule tariff, std::size_t k_max,
                        ControllerOptions controller = {}, std::size_t soc_bins = 100, unsigned jobs = 1)
        : data_(std::make_shared<const ScenarioData>(std::move(data))),
          battery_(battery),
          tariff_(tariff),
          k_max_(k_max),
          controller_(controller),
          jobs_(jobs) {
        battery_.validate();
        tariff_.validate(data_->test_demand.axis().step_minutes);
        if (k_max_ < 1) throw ConfigError("search: K upper bound must be >= 1");
        const auto& test = data_->test_demand;
        baseline_cents_ = detail::sum_cents(
            total_cost(test.axis(), test.values(), {}, data_->test_prices.values(), tariff_, BatteryParams{}));
        if (battery_.disabled()) {
            targets_.axis = data_->train_demand.axis();
            targets_.e_hist.assign(data_->train_demand.size(), 0.0);
            targets_.p_hist.assign(data_->train_demand.size(), 0.0);
        } else {
            targets_ = hindsight_targets(data_->train_demand, battery_);
        }
        policy_ = train_value_table(data_->train_prices, battery_, soc_bins);
    }

    TrialOutcome operator()(const KernelConfig& config) const {
        config.validate();
        if (config.k > k_max_) throw ConfigError("search: K exceeds the precomputed neighbor count");
        const auto& entry = table_for(config.lookback);
        const auto predictions =
            predict_from_table(entry.table, config, entry.training->target_e(), entry.training->target_p());
        const auto run = run_controller(data_->test_demand, data_->test_prices, predictions, policy_, battery_,
                                        controller_);
        const auto cost = detail::sum_cents(total_cost(data_->test_demand.axis(), run.schedule,
                                                       data_->test_prices.values(), tariff_, battery_));
        return {static_cast<double>(baseline_cents_ - cost) / 100.0, annual_cycles(run.schedule, battery_)};
    }

    const ScenarioData& data() const { return *data_; }

private:
    struct Entry {
        std::shared_ptr<const TrainingSet> training;
        NeighborTable table;
    };

    const Entry& table_for(std::size_t lookback) const {
        std::shared_future<std::shared_ptr<const Entry>> future;
        std::promise<std::shared_ptr<const Entry>> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = tables_.find(lookback);
            if (it == tables_.end()) {
                future = promise.get_future().share();
                tables_.emplace(lookback, future);
                owner = true;
            } else {
                future = it->second;
            }
        }
        if (owner) {
            try {
                auto entry = std::make_shared<Entry>();
                entry->training =
                    std::make_shared<const TrainingSet>(build_training_set(data_->train_demand, targets_, lookback));
                const NeighborIndex index(entry->training);
                entry->table = precompute_neighbors(index, data_->test_demand, detail::contiguous_prefix(*data_),
                                                    k_max_, jobs_);
                promise.set_value(std::move(entry));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return *future.get();
    }

    std::shared_ptr<const ScenarioData> data_;
    BatteryParams battery_;
    TariffSchedule tariff_;
    std::size_t k_max_;
    ControllerOptions controller_;
    unsigned jobs_;
    std::int64_t baseline_cents_ = 0;
    HindsightTargets targets_;
    ValueTablePolicy policy_;
    mutable std::mutex mutex_;
    mutable std::map<std::size_t, std::shared_future<std::shared_ptr<const Entry>>> tables_;
};

/// Training history split into a fitting part and a trailing validation
/// year (or the last third when the history is shorter than two years).
inline ScenarioData validation_split(const DemandSeries& demand, const PriceSeries& prices) {
    auto [d, p] = align(demand, prices);
    const std::size_t per_day = static_cast<std::size_t>(24 * 60 / d.axis().step_minutes);
    const std::size_t year = 365 * per_day;
    const std::size_t held = d.size() >= 2 * year ? year : d.size() / 3;
    if (held == 0 || held >= d.size()) throw DataError("search: history too short for a validation split");
    const std::size_t cut = d.size() - held;
    return {d.slice(0, cut), p.slice(0, cut), d.slice(cut, d.size()), p.slice(cut, p.size())};
}

} // namespace bess
