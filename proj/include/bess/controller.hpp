#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bess/arbitrage_policy.hpp"
#include "bess/battery.hpp"
#include "bess/errors.hpp"
#include "bess/kernel_predictor.hpp"
#include "bess/time_series.hpp"

namespace bess {

/// Discharge allowance for arbitrage on top of the peak-shaving dispatch.
enum class DischargeCap {
    /// min((e_t - e_ps) * eta / dt, P): arbitrage may only top up a Stage-1
    /// discharge, so energy held for peak shaving is never sold.
    StageOneOnly,
    /// Energy above the predicted reserve (and the SoC floor).
    AboveReserve,
};

struct ControllerOptions {
    DischargeCap discharge_cap = DischargeCap::StageOneOnly;
};

struct ControllerState {
    double soc = 0.0;
    double p_running = 0.0;
};

struct StepDecision {
    double discharge = 0.0;
    double charge = 0.0;
    double soc_next = 0.0;
    double d_ps = 0.0;
    double q_ps = 0.0;
    /// Running peak after Stage 1 (the bound used for arbitrage charging).
    double peak_after_stage1 = 0.0;
    double net_demand = 0.0;
};

/// One control step. Updates `state` (SoC and running peak) in place.
inline StepDecision control_step(ControllerState& state, double demand, double reserve, double peak_pred,
                                 const ArbitrageBid& bids, const BatteryParams& b, double dt,
                                 const ControllerOptions& options = {}) {
    const double e = state.soc;
    if (e < b.e_min - kSocTolerance || e > b.e_max + kSocTolerance) {
        throw BoundViolation("controller entered a step with SoC " + std::to_string(e) + " kWh out of bounds");
    }
    const double gap = reserve - e;
    const double peak = std::max(state.p_running, peak_pred);
    const double room_down = std::max(0.0, (e - b.e_min) * b.eta / dt);
    const double room_up = std::max(0.0, (b.e_max - e) / (b.eta * dt));

    StepDecision out;
    if (demand > peak) {
        out.d_ps = std::min({std::max(-gap * b.eta / dt, demand - peak), b.p_max, room_down});
    } else if (e < reserve && demand < peak) {
        out.q_ps = std::min({gap / (b.eta * dt), peak - demand, b.p_max, room_up});
    }
    const double soc_ps = soc_step(e, out.d_ps, out.q_ps, dt, b);
    out.peak_after_stage1 = std::max(peak, demand - out.d_ps + out.q_ps);

    const double q_max = std::max(0.0, std::min({out.peak_after_stage1 - demand, b.p_max, room_up}));
    double d_max;
    if (options.discharge_cap == DischargeCap::StageOneOnly) {
        d_max = std::max(0.0, std::min((e - soc_ps) * b.eta / dt, b.p_max));
    } else {
        d_max = std::max(0.0, std::min((e - std::max(reserve, b.e_min)) * b.eta / dt, b.p_max));
    }

    if (out.q_ps > 0.0) {
        out.charge = std::min(bids.charge + out.q_ps, std::max(q_max, out.q_ps));
    } else if (out.d_ps > 0.0) {
        out.discharge = std::min(bids.discharge + out.d_ps, std::max(d_max, out.d_ps));
    } else {
        out.charge = std::min(bids.charge, q_max);
        out.discharge = std::min(bids.discharge, d_max);
        if (out.charge > 0.0 && out.discharge > 0.0) {
            throw BoundViolation("arbitrage bids both charge and discharge");
        }
    }
    out.soc_next = soc_step(e, out.discharge, out.charge, dt, b);
    out.net_demand = demand - out.discharge + out.charge;
    state.soc = std::clamp(out.soc_next, b.e_min, b.e_max);
    state.p_running = std::max(out.peak_after_stage1, out.net_demand);
    return out;
}

/// Controller trajectory over a test period.
struct ControllerRun {
    DispatchSchedule schedule;
    std::vector<double> p_running;
    std::vector<double> d_ps;
    std::vector<double> q_ps;
    std::vector<double> reserve;
    std::vector<double> peak_pred;
};

/// Run the controller step by step with per-step predictions. The running
/// peak restarts at zero at each local calendar month; the SoC carries
/// over. Invariants are checked at every step and violations throw.
inline ControllerRun run_controller(const DemandSeries& demand, const PriceSeries& prices,
                                    std::span<const Prediction> predictions, const ArbitragePolicy& policy,
                                    const BatteryParams& battery, const ControllerOptions& options = {}) {
    const std::size_t n = demand.size();
    if (prices.size() != n || predictions.size() != n) {
        throw DataError("controller: demand, prices and predictions must have equal length");
    }
    const double dt = demand.step_hours();
    ControllerRun run;
    auto& s = run.schedule;
    s.step_hours = dt;
    s.discharge.resize(n);
    s.charge.resize(n);
    s.soc.resize(n);
    s.net_demand.resize(n);
    run.p_running.resize(n);
    run.d_ps.resize(n);
    run.q_ps.resize(n);
    run.reserve.resize(n);
    run.peak_pred.resize(n);

    ControllerState state{battery.e0, 0.0};
    for (const auto& month : month_blocks(demand.axis(), n)) {
        state.p_running = 0.0;
        for (std::size_t t = month.begin; t < month.end; ++t) {
            const auto& pred = predictions[t];
            Headroom headroom{battery.p_max, battery.p_max};
            const auto bids = policy.step(prices[t], state.soc, headroom, battery);
            const double before = state.p_running;
            const auto step = control_step(state, demand[t], pred.soc_reserve, pred.peak_target, bids, battery, dt,
                                           options);
            if (step.discharge > 0.0 && step.charge > 0.0) {
                throw BoundViolation("simultaneous charge and discharge at step " + std::to_string(t));
            }
            if (step.discharge > battery.p_max + kSocTolerance || step.charge > battery.p_max + kSocTolerance) {
                throw BoundViolation("power limit exceeded at step " + std::to_string(t));
            }
            if (state.p_running < before) {
                throw BoundViolation("running peak decreased within a month at step " + std::to_string(t));
            }
            s.discharge[t] = step.discharge;
            s.charge[t] = step.charge;
            s.soc[t] = step.soc_next;
            s.net_demand[t] = step.net_demand;
            run.p_running[t] = state.p_running;
            run.d_ps[t] = step.d_ps;
            run.q_ps[t] = step.q_ps;
            run.reserve[t] = pred.soc_reserve;
            run.peak_pred[t] = pred.peak_target;
        }
    }
    return run;
}

} // namespace bess
