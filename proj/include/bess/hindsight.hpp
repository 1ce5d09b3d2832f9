#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bess/battery.hpp"
#include "bess/errors.hpp"
#include "bess/lp/solver.hpp"
#include "bess/parallel.hpp"
#include "bess/tariff.hpp"
#include "bess/time_series.hpp"

namespace bess {

enum class LpVariant { Combined, PeakShaving, ArbitrageStage2 };

/// How the peak-shaving tie-break is solved.
enum class TieBreak {
    /// Minimise the peak, then minimise total SoC with the peak held at its
    /// optimum. This is the small-delta limit and is numerically robust.
    Lexicographic,
    /// One LP with objective p + delta * sum(e).
    Weighted,
};

/// Inputs to one hindsight LP. Flow quantities are kW, SoC kWh, prices
/// $/kWh. `prices` may be empty for the peak-shaving variant.
struct LpProblem {
    LpVariant variant = LpVariant::Combined;
    std::span<const double> demand;
    std::span<const double> prices;
    BatteryParams battery;
    double step_hours = 1.0 / 12.0;
    /// Demand charge rate applied to the per-step peak (Combined only).
    double kappa = 0.0;
    /// Tie-break weight (PeakShaving). Unset means the default rule.
    std::optional<double> delta;
    TieBreak tie_break = TieBreak::Lexicographic;
    /// Cap on total discharged energy over the horizon in kWh.
    std::optional<double> discharge_cap_kwh;
    /// Stage-1 outputs fixed in the arbitrage stage.
    double p_fixed = 0.0;
    std::vector<double> e_fixed;
    lp::Method method = lp::Method::Automatic;

    std::size_t horizon() const { return demand.size(); }
};

/// Default tie-break weight: 1e-6 / (E_max * T) with E_max floored at 1 kWh,
/// so the whole term stays below 1e-6 kW of peak.
inline double default_delta(const BatteryParams& battery, std::size_t horizon) {
    return 1e-6 / (std::max(battery.e_max, 1.0) * static_cast<double>(std::max<std::size_t>(horizon, 1)));
}

/// soc[t] is e_{t+1}; net_demand[t] = D_t - d_t + q_t.
struct LpSolution {
    lp::Status status = lp::Status::NumericalFailure;
    double peak = 0.0;
    std::vector<double> discharge;
    std::vector<double> charge;
    std::vector<double> soc;
    std::vector<double> net_demand;
    double objective = 0.0;
    int iterations = 0;
    /// Largest constraint or bound violation of the returned point.
    double max_violation = 0.0;

    bool optimal() const { return status == lp::Status::Optimal; }

    /// Arbitrage part of the objective: sum of ((c - price) d + price q) dt.
    double arbitrage_cost(std::span<const double> prices, const BatteryParams& battery, double step_hours) const {
        double total = 0.0;
        for (std::size_t t = 0; t < discharge.size(); ++t) {
            total += ((battery.c_deg - prices[t]) * discharge[t] + prices[t] * charge[t]) * step_hours;
        }
        return total;
    }

    DispatchSchedule schedule(double step_hours) const {
        return DispatchSchedule{step_hours, discharge, charge, soc, net_demand};
    }
};

namespace detail {

struct DispatchColumns {
    int d0 = 0;
    int q0 = 0;
    int e0 = 0;
    int peak = -1;
    int n = 0;
    int d(std::size_t t) const { return d0 + static_cast<int>(t); }
    int q(std::size_t t) const { return q0 + static_cast<int>(t); }
    int e(std::size_t t) const { return e0 + static_cast<int>(t); }
};

/// Battery dynamics shared by all three variants: power bounds, SoC bounds
/// and the SoC recursion. Column e(t) is the SoC after step t.
inline DispatchColumns add_dispatch(lp::Model& model, const LpProblem& problem,
                                    std::span<const double> soc_floor = {}) {
    const auto& b = problem.battery;
    const std::size_t T = problem.horizon();
    const double dt = problem.step_hours;
    DispatchColumns cols;
    cols.n = static_cast<int>(T);
    cols.d0 = model.num_cols();
    for (std::size_t t = 0; t < T; ++t) model.add_column(0.0, 0.0, b.p_max);
    cols.q0 = model.num_cols();
    for (std::size_t t = 0; t < T; ++t) model.add_column(0.0, 0.0, b.p_max);
    cols.e0 = model.num_cols();
    for (std::size_t t = 0; t < T; ++t) {
        const double lo = soc_floor.empty() ? b.e_min : std::clamp(soc_floor[t], b.e_min, b.e_max);
        model.add_column(0.0, lo, b.e_max);
    }
    for (std::size_t t = 0; t < T; ++t) {
        const double rhs = t == 0 ? b.e0 : 0.0;
        const int row = model.add_row(rhs, rhs);
        model.add_coefficient(row, cols.e(t), 1.0);
        if (t > 0) model.add_coefficient(row, cols.e(t - 1), -1.0);
        model.add_coefficient(row, cols.d(t), dt / b.eta);
        model.add_coefficient(row, cols.q(t), -b.eta * dt);
    }
    if (problem.discharge_cap_kwh) {
        const int row = model.add_row(-lp::kInf, *problem.discharge_cap_kwh);
        for (std::size_t t = 0; t < T; ++t) model.add_coefficient(row, cols.d(t), dt);
    }
    return cols;
}

/// Rows p + d_t - q_t >= D_t. The peak is kept non-negative: exporting
/// cannot earn a demand-charge credit.
inline void add_peak_rows(lp::Model& model, const LpProblem& problem, DispatchColumns& cols) {
    cols.peak = model.add_column(0.0, 0.0, lp::kInf);
    for (std::size_t t = 0; t < problem.horizon(); ++t) {
        const int row = model.add_row(problem.demand[t], lp::kInf);
        model.add_coefficient(row, cols.peak, 1.0);
        model.add_coefficient(row, cols.d(t), 1.0);
        model.add_coefficient(row, cols.q(t), -1.0);
    }
}

inline bool initial_soc_out_of_bounds(const BatteryParams& b) {
    return b.e0 < b.e_min - kSocTolerance || b.e0 > b.e_max + kSocTolerance;
}

inline LpSolution unpack(const lp::Model& model, const lp::Solution& raw, const LpProblem& problem,
                         const DispatchColumns& cols) {
    LpSolution out;
    out.status = raw.status;
    out.iterations = raw.iterations;
    if (raw.status != lp::Status::Optimal) return out;
    const std::size_t T = problem.horizon();
    out.discharge.resize(T);
    out.charge.resize(T);
    out.soc.resize(T);
    out.net_demand.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.discharge[t] = raw.x[static_cast<std::size_t>(cols.d(t))];
        out.charge[t] = raw.x[static_cast<std::size_t>(cols.q(t))];
        out.soc[t] = raw.x[static_cast<std::size_t>(cols.e(t))];
        out.net_demand[t] = problem.demand[t] - out.discharge[t] + out.charge[t];
    }
    out.peak = cols.peak >= 0 ? raw.x[static_cast<std::size_t>(cols.peak)]
                              : std::max(0.0, *std::max_element(out.net_demand.begin(), out.net_demand.end()));
    out.objective = raw.objective;
    out.max_violation = model.max_violation(raw.x);
    return out;
}

inline void check_problem(const LpProblem& problem, LpVariant expected) {
    if (problem.variant != expected) throw std::invalid_argument("LpProblem variant does not match solver");
    if (problem.horizon() == 0) throw DataError("LP horizon must be at least one step");
    if (expected != LpVariant::PeakShaving && problem.prices.size() != problem.horizon()) {
        throw DataError("LP demand and price lengths differ");
    }
    if (!(problem.step_hours > 0.0)) throw DataError("LP step must be positive");
}

} // namespace detail

/// Combined model: energy, degradation and demand charges in one LP. The objective
/// includes the constant sum(price * demand * dt).
inline LpSolution solve_combined(const LpProblem& problem) {
    detail::check_problem(problem, LpVariant::Combined);
    if (detail::initial_soc_out_of_bounds(problem.battery)) {
        LpSolution infeasible;
        infeasible.status = lp::Status::Infeasible;
        return infeasible;
    }
    const auto& b = problem.battery;
    const double dt = problem.step_hours;
    lp::Model model;
    auto cols = detail::add_dispatch(model, problem);
    detail::add_peak_rows(model, problem, cols);
    for (std::size_t t = 0; t < problem.horizon(); ++t) {
        model.set_cost(cols.d(t), (b.c_deg - problem.prices[t]) * dt);
        model.set_cost(cols.q(t), problem.prices[t] * dt);
        model.objective_offset += problem.prices[t] * problem.demand[t] * dt;
    }
    model.set_cost(cols.peak, problem.kappa);
    return detail::unpack(model, lp::solve(model, problem.method), problem, cols);
}

/// Peak shaving: minimise the horizon peak, breaking ties towards the lowest SoC
/// trajectory. The reported objective is p + delta * sum(e).
inline LpSolution solve_peak_shaving(const LpProblem& problem) {
    detail::check_problem(problem, LpVariant::PeakShaving);
    if (detail::initial_soc_out_of_bounds(problem.battery)) {
        LpSolution infeasible;
        infeasible.status = lp::Status::Infeasible;
        return infeasible;
    }
    const double delta = problem.delta.value_or(default_delta(problem.battery, problem.horizon()));
    if (!(delta > 0.0)) throw ConfigError("tie-break weight delta must be > 0");

    lp::Model model;
    auto cols = detail::add_dispatch(model, problem);
    detail::add_peak_rows(model, problem, cols);
    model.set_cost(cols.peak, 1.0);

    auto finish = [&](LpSolution s, int extra_iterations) {
        s.iterations += extra_iterations;
        if (s.optimal()) {
            double soc_sum = 0.0;
            for (double e : s.soc) soc_sum += e;
            s.objective = s.peak + delta * soc_sum;
        }
        return s;
    };

    if (problem.tie_break == TieBreak::Weighted) {
        for (std::size_t t = 0; t < problem.horizon(); ++t) model.set_cost(cols.e(t), delta);
        return finish(detail::unpack(model, lp::solve(model, problem.method), problem, cols), 0);
    }

    const auto first = lp::solve(model, problem.method);
    if (first.status != lp::Status::Optimal) return detail::unpack(model, first, problem, cols);
    const double best_peak = first.x[static_cast<std::size_t>(cols.peak)];
    model.set_cost(cols.peak, 0.0);
    // Pin the peak column; a fixed column is eliminated by both backends,
    // whereas a hairline box leaves the interior point without an interior.
    const bool exact = problem.method == lp::Method::Simplex ||
                       (problem.method == lp::Method::Automatic && model.num_rows() <= lp::kSimplexRowLimit);
    const double pinned = best_peak + (exact ? 1e-12 : 1e-9) * std::max(1.0, std::abs(best_peak));
    model.set_col_bounds(cols.peak, pinned, pinned);
    for (std::size_t t = 0; t < problem.horizon(); ++t) model.set_cost(cols.e(t), 1.0);
    lp::InteriorPointOptions tie_break_options;
    tie_break_options.tolerance = 1e-8;
    auto second = lp::solve(model, problem.method, tie_break_options);
    if (second.status != lp::Status::Optimal) {
        throw OptimizationError("peak-shaving tie-break stage failed: " + std::string(lp::to_string(second.status)));
    }
    auto out = detail::unpack(model, second, problem, cols);
    // the pinned column is only a bound; report the peak the schedule attains
    out.peak = std::max(best_peak, *std::max_element(out.net_demand.begin(), out.net_demand.end()));
    return finish(std::move(out), first.iterations);
}

/// Second stage: arbitrage under the Stage-1 peak and SoC reserve. Both are
/// loosened by 1e-9 (relative) so that a Stage-1 point reported to solver
/// precision stays feasible.
inline LpSolution solve_arbitrage_stage2(const LpProblem& problem) {
    detail::check_problem(problem, LpVariant::ArbitrageStage2);
    if (problem.e_fixed.size() != problem.horizon()) throw DataError("stage-2 SoC reserve length differs from horizon");
    const auto& b = problem.battery;
    const double dt = problem.step_hours;
    const double peak_cap = problem.p_fixed + 1e-9 * std::max(1.0, std::abs(problem.p_fixed));
    const double soc_slack = 1e-9 * std::max(1.0, b.e_max);
    std::vector<double> floor(problem.horizon());
    for (std::size_t t = 0; t < floor.size(); ++t) floor[t] = problem.e_fixed[t] - soc_slack;

    lp::Model model;
    auto cols = detail::add_dispatch(model, problem, floor);
    for (std::size_t t = 0; t < problem.horizon(); ++t) {
        const int row = model.add_row(problem.demand[t] - peak_cap, lp::kInf);
        model.add_coefficient(row, cols.d(t), 1.0);
        model.add_coefficient(row, cols.q(t), -1.0);
        model.set_cost(cols.d(t), (b.c_deg - problem.prices[t]) * dt);
        model.set_cost(cols.q(t), problem.prices[t] * dt);
    }
    auto out = detail::unpack(model, lp::solve(model, problem.method), problem, cols);
    if (out.status == lp::Status::Infeasible) {
        throw OptimizationError("stage-2 arbitrage LP infeasible for the given Stage-1 peak and reserve");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training targets

/// e_hist[i] is the SoC at the start of step i (e_hist[0] = e0) and p_hist[i]
/// the maximum hindsight net demand over the local day containing step i.
struct HindsightTargets {
    TimeAxis axis;
    std::vector<double> e_hist;
    std::vector<double> p_hist;
    std::vector<double> net_demand;

    std::size_t size() const { return e_hist.size(); }
};

/// Rebuild mutually exclusive charge/discharge from a SoC path. Burning
/// energy through simultaneous charge and discharge lowers the SoC without
/// touching the meter more than the exclusive equivalent does, so the
/// rebuilt net demand never exceeds the original.
inline void canonicalize_dispatch(double e0, std::span<const double> soc, std::span<const double> demand,
                                  const BatteryParams& b, double dt, std::vector<double>& discharge,
                                  std::vector<double>& charge, std::vector<double>& net) {
    const std::size_t T = soc.size();
    discharge.assign(T, 0.0);
    charge.assign(T, 0.0);
    net.resize(T);
    double prev = e0;
    for (std::size_t t = 0; t < T; ++t) {
        const double change = soc[t] - prev;
        if (change < 0.0) {
            discharge[t] = std::min(-change * b.eta / dt, b.p_max);
        } else if (change > 0.0) {
            charge[t] = std::min(change / (b.eta * dt), b.p_max);
        }
        net[t] = demand[t] - discharge[t] + charge[t];
        prev = soc[t];
    }
}

/// Targets from one peak-shaving solution. `axis` is the axis of the
/// solution's first step and defines local days.
inline HindsightTargets extract_targets(const LpSolution& solution, std::span<const double> demand,
                                        const TimeAxis& axis, const BatteryParams& battery) {
    if (!solution.optimal()) throw OptimizationError("extract_targets needs an optimal peak-shaving solution");
    const std::size_t T = demand.size();
    if (solution.soc.size() != T) throw DataError("extract_targets: solution and demand lengths differ");
    HindsightTargets out;
    out.axis = axis;
    std::vector<double> d, q;
    canonicalize_dispatch(battery.e0, solution.soc, demand, battery, axis.step_hours(), d, q, out.net_demand);
    out.e_hist.resize(T);
    out.e_hist[0] = battery.e0;
    for (std::size_t t = 1; t < T; ++t) out.e_hist[t] = std::clamp(solution.soc[t - 1], battery.e_min, battery.e_max);
    out.p_hist.resize(T);
    for (const auto& day : day_blocks(axis, T)) {
        const double peak = *std::max_element(out.net_demand.begin() + static_cast<std::ptrdiff_t>(day.begin),
                                              out.net_demand.begin() + static_cast<std::ptrdiff_t>(day.end));
        std::fill(out.p_hist.begin() + static_cast<std::ptrdiff_t>(day.begin),
                  out.p_hist.begin() + static_cast<std::ptrdiff_t>(day.end), std::max(peak, 0.0));
    }
    return out;
}

inline void append(HindsightTargets& into, const HindsightTargets& more) {
    if (into.e_hist.empty()) into.axis = more.axis;
    into.e_hist.insert(into.e_hist.end(), more.e_hist.begin(), more.e_hist.end());
    into.p_hist.insert(into.p_hist.end(), more.p_hist.begin(), more.p_hist.end());
    into.net_demand.insert(into.net_demand.end(), more.net_demand.begin(), more.net_demand.end());
}

struct HindsightOptions {
    lp::Method method = lp::Method::Automatic;
    unsigned jobs = 1;
};

namespace detail {

inline std::string month_label(const CalendarBlock& block) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", static_cast<int>(block.first_day.year()),
                  static_cast<unsigned>(block.first_day.month()));
    return buf;
}

} // namespace detail

/// Peak-shaving targets over a multi-month record, one LP per local
/// calendar month, each month starting from battery.e0.
inline HindsightTargets hindsight_targets(const DemandSeries& demand, const BatteryParams& battery,
                                          const HindsightOptions& options = {}) {
    const auto months = month_blocks(demand.axis(), demand.size());
    std::vector<HindsightTargets> parts(months.size());
    parallel_for(months.size(), options.jobs, [&](std::size_t m) {
        const auto& block = months[m];
        LpProblem problem;
        problem.variant = LpVariant::PeakShaving;
        problem.demand = demand.values().subspan(block.begin, block.size());
        problem.battery = battery;
        problem.step_hours = demand.step_hours();
        problem.method = options.method;
        const auto solution = solve_peak_shaving(problem);
        if (!solution.optimal()) {
            throw OptimizationError("peak-shaving LP for " + detail::month_label(block) + " " +
                                    std::string(lp::to_string(solution.status)));
        }
        parts[m] = extract_targets(solution, problem.demand, demand.axis().shifted(block.begin), battery);
    });
    HindsightTargets out;
    for (const auto& part : parts) append(out, part);
    return out;
}

/// Perfect-foresight benchmark: the combined LP per month with that month's
/// demand charge rate and, if the battery sets one, the average daily cycle
/// cap.
inline DispatchSchedule hindsight_benchmark(const DemandSeries& demand, const PriceSeries& prices,
                                            const BatteryParams& battery, const TariffSchedule& tariff,
                                            const HindsightOptions& options = {}) {
    if (demand.axis() != prices.axis() || demand.size() != prices.size()) {
        throw AlignmentError("hindsight_benchmark: demand and prices are not aligned");
    }
    const auto months = month_blocks(demand.axis(), demand.size());
    std::vector<DispatchSchedule> parts(months.size());
    const double dt = demand.step_hours();
    parallel_for(months.size(), options.jobs, [&](std::size_t m) {
        const auto& block = months[m];
        LpProblem problem;
        problem.variant = LpVariant::Combined;
        problem.demand = demand.values().subspan(block.begin, block.size());
        problem.prices = prices.values().subspan(block.begin, block.size());
        problem.battery = battery;
        problem.step_hours = dt;
        problem.kappa = tariff.kappa(season_of(block.first_day));
        problem.method = options.method;
        if (battery.cycle_limit_per_day) {
            const double days = static_cast<double>(block.size()) * dt / 24.0;
            problem.discharge_cap_kwh = days * battery.e_max * *battery.cycle_limit_per_day;
        }
        const auto solution = solve_combined(problem);
        if (!solution.optimal()) {
            throw OptimizationError("combined LP for " + detail::month_label(block) + " " +
                                    std::string(lp::to_string(solution.status)));
        }
        parts[m] = solution.schedule(dt);
    });
    DispatchSchedule out;
    out.step_hours = dt;
    for (const auto& part : parts) out.append(part);
    return out;
}

// ---------------------------------------------------------------------------
// Two-stage equivalence check

struct EquivalenceReport {
    double peak_combined = 0.0;
    double peak_two_stage = 0.0;
    double arbitrage_combined = 0.0;
    double arbitrage_two_stage = 0.0;
    double kappa = 0.0;
    /// The equivalence is only claimed for a demand charge far above energy
    /// prices; smaller scales are reported but flagged.
    bool applicable = false;

    double peak_gap() const { return std::abs(peak_combined - peak_two_stage); }
    /// Relative to the larger arbitrage value, floored at $1.
    double arbitrage_gap() const {
        return std::abs(arbitrage_combined - arbitrage_two_stage) /
               std::max({std::abs(arbitrage_combined), std::abs(arbitrage_two_stage), 1.0});
    }
};

inline constexpr double kEquivalenceMinScale = 1e3;

/// Solve the combined LP with kappa = kappa_scale * max|price| * dt * T and
/// the two-stage pair on the same data, and compare peaks and arbitrage.
inline EquivalenceReport verify_proposition1(std::span<const double> demand, std::span<const double> prices,
                                             const BatteryParams& battery, double step_hours, double kappa_scale,
                                             lp::Method method = lp::Method::Automatic) {
    double max_price = 0.0;
    for (double p : prices) max_price = std::max(max_price, std::abs(p));
    EquivalenceReport report;
    report.kappa = kappa_scale * std::max(max_price, 1e-12) * step_hours * static_cast<double>(demand.size());
    report.applicable = kappa_scale >= kEquivalenceMinScale;

    LpProblem combined;
    combined.variant = LpVariant::Combined;
    combined.demand = demand;
    combined.prices = prices;
    combined.battery = battery;
    combined.step_hours = step_hours;
    combined.kappa = report.kappa;
    combined.method = method;
    const auto comb = solve_combined(combined);

    LpProblem stage1 = combined;
    stage1.variant = LpVariant::PeakShaving;
    const auto ps = solve_peak_shaving(stage1);

    if (!comb.optimal() || !ps.optimal()) {
        throw OptimizationError("two-stage equivalence check: combined or peak-shaving LP not optimal");
    }
    LpProblem stage2 = combined;
    stage2.variant = LpVariant::ArbitrageStage2;
    stage2.p_fixed = ps.peak;
    stage2.e_fixed = ps.soc;
    const auto arb = solve_arbitrage_stage2(stage2);
    if (!arb.optimal()) throw OptimizationError("two-stage equivalence check: stage-2 LP not optimal");

    report.peak_combined = comb.peak;
    report.peak_two_stage = ps.peak;
    report.arbitrage_combined = comb.arbitrage_cost(prices, battery, step_hours);
    report.arbitrage_two_stage = arb.objective;
    return report;
}

} // namespace bess
