#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bess/arbitrage_policy.hpp"
#include "bess/artifacts.hpp"
#include "bess/backtest.hpp"
#include "bess/config.hpp"
#include "bess/controller.hpp"
#include "bess/equivalence.hpp"
#include "bess/errors.hpp"
#include "bess/hindsight.hpp"
#include "bess/hp_search.hpp"
#include "bess/io.hpp"
#include "bess/kernel_predictor.hpp"
#include "bess/parallel.hpp"
#include "bess/report.hpp"
#include "bess/synth.hpp"
#include "bess/tariff.hpp"
#include "bess/time_series.hpp"

namespace {

using namespace bess;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerification = 4;
constexpr int kExitInternal = 5;

/// Verification ran to completion but the result is outside tolerance.
class VerificationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    unsigned jobs = default_jobs();

    RunConfig load() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config_path, "INI configuration file");
    cmd->add_option("--set", common.overrides, "Override a setting, e.g. --set kernel.k=50")->take_all();
}

LoadOptions load_options(const RunConfig& cfg) {
    LoadOptions o;
    o.step_minutes = cfg.data.step_minutes;
    return o;
}

std::string pick_path(const std::string& flag, const std::string& from_config, const char* what) {
    const std::string& p = flag.empty() ? from_config : flag;
    if (p.empty()) throw ConfigError(std::string("no ") + what + " file given (flag or data section)");
    return p;
}

void write_json(const std::string& path, const nlohmann::json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

std::string targets_csv(const HindsightTargets& t, std::span<const double> demand) {
    std::ostringstream out;
    out << "timestamp,demand_kw,e_hist_kwh,p_hist_kw,net_kw\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << format_timestamp(t.axis.instant(i), t.axis.utc_offset) << ',' << io::format_double(demand[i]) << ','
            << io::format_double(t.e_hist[i]) << ',' << io::format_double(t.p_hist[i]) << ','
            << io::format_double(t.net_demand[i]) << '\n';
    }
    return out.str();
}

std::string benchmark_csv(const TimeAxis& axis, std::span<const double> demand, const DispatchSchedule& s) {
    std::ostringstream out;
    out << "timestamp,demand_kw,d_kw,q_kw,soc_kwh,net_kw\n";
    for (std::size_t i = 0; i < demand.size(); ++i) {
        out << format_timestamp(axis.instant(i), axis.utc_offset) << ',' << io::format_double(demand[i]) << ','
            << io::format_double(s.discharge[i]) << ',' << io::format_double(s.charge[i]) << ','
            << io::format_double(s.soc[i]) << ',' << io::format_double(s.net_demand[i]) << '\n';
    }
    return out.str();
}

nlohmann::json kernel_json(const KernelConfig& k) {
    return {{"lookback", k.lookback}, {"sigma", k.sigma}, {"k", k.k}, {"alpha", k.alpha}};
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    Common common;
    std::string out_demand;
    std::string out_prices;
    std::optional<int> days;
    std::optional<std::uint64_t> seed;
    std::string start;
};

int run_synth(const SynthArgs& a) {
    auto cfg = a.common.load();
    auto& d = cfg.synth.demand;
    auto& p = cfg.synth.prices;
    if (a.days) d.days = p.days = *a.days;
    if (a.seed) {
        d.seed = *a.seed;
        p.seed = *a.seed + 1;
    }
    if (!a.start.empty()) {
        apply_setting(cfg, "synth", "start", a.start);
    }
    const auto demand = synth_demand(d);
    write_series(a.out_demand, demand);
    if (!a.out_prices.empty()) write_series(a.out_prices, synth_prices(p));
    std::cout << "wrote " << demand.size() << " demand steps to " << a.out_demand << "\n";
    return 0;
}

struct HindsightArgs {
    Common common;
    std::string demand;
    std::string prices;
    std::string mode = "targets";
    std::string out;
};

int run_hindsight(const HindsightArgs& a) {
    const auto cfg = a.common.load();
    const auto battery = cfg.battery.for_power(cfg.p_max_kw);
    HindsightOptions opts;
    opts.method = cfg.method;
    opts.jobs = a.common.jobs;
    const auto demand = load_demand(pick_path(a.demand, cfg.data.demand, "demand"), load_options(cfg));
    if (a.mode == "targets") {
        const auto t = hindsight_targets(demand, battery, opts);
        io::write_file_atomic(a.out, targets_csv(t, demand.values()));
    } else {
        const auto prices = load_prices(pick_path(a.prices, cfg.data.prices, "price"));
        const auto [d, p] = align(demand, prices);
        const auto s = hindsight_benchmark(d, p, battery, cfg.tariff, opts);
        io::write_file_atomic(a.out, benchmark_csv(d.axis(), d.values(), s));
        const auto bill = total_cost(d.axis(), s, p.values(), cfg.tariff, battery);
        std::cout << "total cost " << io::format_double(bill.total()) << " $, annual cycles "
                  << io::format_double(annual_cycles(s, battery)) << "\n";
    }
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    Common common;
    std::string demand;
    std::string targets;
    std::string out;
};

int run_train(const TrainArgs& a) {
    const auto cfg = a.common.load();
    const auto battery = cfg.battery.for_power(cfg.p_max_kw);
    HindsightOptions opts;
    opts.method = cfg.method;
    opts.jobs = a.common.jobs;
    const auto demand = load_demand(pick_path(a.demand, cfg.data.demand, "demand"), load_options(cfg));
    HindsightTargets targets;
    if (a.targets.empty()) {
        targets = hindsight_targets(demand, battery, opts);
    } else {
        targets = read_targets_csv(a.targets);
        if (targets.axis.start != demand.axis().start || targets.axis.step_minutes != demand.axis().step_minutes ||
            targets.size() != demand.size()) {
            throw AlignmentError(a.targets + ": targets do not cover the same steps as the demand history");
        }
    }
    const auto model = KernelModel::train(demand, targets, cfg.kernel);
    save_kernel_model(a.out, model);
    std::cout << "trained on " << model.training().size() << " windows; wrote " << a.out << "\n";
    return 0;
}

struct TrainArbArgs {
    Common common;
    std::string prices;
    std::string out;
};

int run_train_arb(const TrainArbArgs& a) {
    const auto cfg = a.common.load();
    const auto battery = cfg.battery.for_power(cfg.p_max_kw);
    const auto prices = load_prices(pick_path(a.prices, cfg.data.prices, "price"));
    const auto policy = train_value_table(prices, battery, cfg.soc_bins);
    save_value_table(a.out, policy);
    std::cout << "DP value at e0: " << io::format_double(policy.dp_value()) << " $; wrote " << a.out << "\n";
    return 0;
}

struct BacktestArgs {
    Common common;
    std::string demand;
    std::string prices;
    std::string model;
    std::string arb;
    std::string out;
    std::string report;
};

int run_backtest(const BacktestArgs& a) {
    const auto cfg = a.common.load();
    const auto battery = cfg.battery.for_power(cfg.p_max_kw);
    const auto demand = load_demand(pick_path(a.demand, cfg.data.demand, "demand"), load_options(cfg));
    const auto prices = load_prices(pick_path(a.prices, cfg.data.prices, "price"));
    const auto [d, p] = align(demand, prices);
    auto model = load_kernel_model(a.model);
    // Settings in the config override those stored with the model, except
    // the look-back, which fixes the stored windows.
    KernelConfig kc = cfg.kernel;
    kc.lookback = model.config().lookback;
    kc.validate();
    const auto& ts = model.training();
    std::span<const double> prefix;
    if (ts.axis().step_minutes == d.axis().step_minutes && ts.axis().instant(ts.demand().size()) == d.axis().start) {
        prefix = ts.demand();
    }
    const auto table = precompute_neighbors(model.index(), d, prefix, kc.k, a.common.jobs);
    const auto predictions = predict_from_table(table, kc, ts.target_e(), ts.target_p());
    std::unique_ptr<ArbitragePolicy> policy;
    if (a.arb.empty()) {
        policy = std::make_unique<IdlePolicy>();
    } else {
        policy = std::make_unique<ValueTablePolicy>(load_value_table(a.arb));
    }
    const auto run = run_controller(d, p, predictions, *policy, battery, cfg.controller);
    io::write_file_atomic(a.out, schedule_to_csv(d.axis(), d.values(), run));
    const auto bill = total_cost(d.axis(), run.schedule, p.values(), cfg.tariff, battery);
    const auto base = total_cost(d.axis(), d.values(), {}, p.values(), cfg.tariff, battery);
    if (!a.report.empty()) {
        write_json(a.report, {{"controller", bill_to_json(bill)},
                              {"no_storage", bill_to_json(base)},
                              {"annual_cycles", annual_cycles(run.schedule, battery)}});
    }
    std::cout << "controller cost " << io::format_double(bill.total()) << " $ vs no storage "
              << io::format_double(base.total()) << " $; wrote " << a.out << "\n";
    return 0;
}

struct SweepArgs {
    Common common;
    std::string demand;
    std::string prices;
    std::string test_start;
    std::string sizes;
    std::string out;
    std::string csv;
    std::string peaks_csv;
};

ScenarioData load_scenario(const RunConfig& cfg, const std::string& demand_flag, const std::string& prices_flag) {
    const auto demand = load_demand(pick_path(demand_flag, cfg.data.demand, "demand"), load_options(cfg));
    const auto prices = load_prices(pick_path(prices_flag, cfg.data.prices, "price"));
    if (!cfg.data.test_start) throw ConfigError("data.test_start is required to split training and test data");
    return split_by_date(demand, prices, *cfg.data.test_start);
}

int run_sweep_cmd(const SweepArgs& a) {
    auto cfg = a.common.load();
    if (!a.sizes.empty()) apply_setting(cfg, "sweep", "sizes_kw", a.sizes);
    if (!a.test_start.empty()) apply_setting(cfg, "data", "test_start", a.test_start);
    cfg.validate();
    const auto data = load_scenario(cfg, a.demand, a.prices);
    const auto report = run_sweep(data, cfg.scenario(a.common.jobs));
    auto j = report_to_json(report);
    j["kernel"] = kernel_json(cfg.kernel);
    write_json(a.out, j);
    if (!a.csv.empty()) io::write_file_atomic(a.csv, report_to_csv(report));
    if (!a.peaks_csv.empty()) io::write_file_atomic(a.peaks_csv, peaks_to_csv(report));
    std::cout << report_to_csv(report);
    return 0;
}

struct TuneArgs {
    Common common;
    std::string demand;
    std::string prices;
    std::string out;
    std::string trace;
};

int run_tune(const TuneArgs& a) {
    const auto cfg = a.common.load();
    const auto demand = load_demand(pick_path(a.demand, cfg.data.demand, "demand"), load_options(cfg));
    const auto prices = load_prices(pick_path(a.prices, cfg.data.prices, "price"));
    // Tuning never sees the test period.
    ScenarioData history;
    if (cfg.data.test_start) {
        const auto split = split_by_date(demand, prices, *cfg.data.test_start);
        history = validation_split(split.train_demand, split.train_prices);
    } else {
        history = validation_split(demand, prices);
    }
    SearchSpec spec = cfg.search;
    spec.start = cfg.kernel;
    // Refinement stays inside the coarse range, so this bounds every trial.
    std::size_t k_max = spec.start.k;
    for (auto k : spec.k_grid) k_max = std::max(k_max, k);
    const ValidationEvaluator evaluator(history, cfg.battery.for_power(cfg.p_max_kw), cfg.tariff, k_max,
                                        cfg.controller, cfg.soc_bins, a.common.jobs);
    const auto result = tune(spec, [&](const KernelConfig& k) { return evaluator(k); }, 1);
    io::write_file_atomic(a.out, kernel_to_ini(result.best));
    if (!a.trace.empty()) {
        std::ostringstream t;
        t << "stage,lookback,sigma,k,alpha,savings,cycles,objective,cached\n";
        for (const auto& r : result.trace) {
            t << r.stage << ',' << r.config.lookback << ',' << io::format_double(r.config.sigma) << ',' << r.config.k
              << ',' << io::format_double(r.config.alpha) << ',' << io::format_double(r.outcome.savings) << ','
              << io::format_double(r.outcome.cycles) << ',' << io::format_double(r.objective) << ','
              << (r.cached ? 1 : 0) << '\n';
        }
        io::write_file_atomic(a.trace, t.str());
    }
    std::cout << "best lookback " << result.best.lookback << ", sigma " << io::format_double(result.best.sigma)
              << ", K " << result.best.k << " (validation savings " << io::format_double(result.best_objective)
              << " $, " << result.evaluations << " evaluations)\n";
    return 0;
}

struct ReportArgs {
    Common common;
    std::string in;
    std::string prices;
    std::string out;
};

int run_report(const ReportArgs& a) {
    const auto cfg = a.common.load();
    const auto schedule = read_schedule_csv(a.in);
    std::vector<double> price_values(schedule.net_demand.size(), 0.0);
    const bool priced = !a.prices.empty();
    if (priced) {
        DemandSeries net(schedule.axis, std::vector<double>(schedule.net_demand.size(), 0.0));
        const auto [d, p] = align(net, load_prices(a.prices));
        if (d.size() != net.size()) throw AlignmentError("prices do not cover the whole schedule");
        price_values = p.data();
    }
    const auto battery = cfg.battery.for_power(cfg.p_max_kw);
    const auto bill = total_cost(schedule.axis, schedule.net_demand, schedule.discharge, price_values, cfg.tariff,
                                 battery);
    auto j = bill_to_json(bill);
    j["energy_priced"] = priced;
    write_json(a.out, j);
    std::cout << "total " << io::format_double(bill.total()) << " $ over " << bill.months.size() << " months\n";
    return 0;
}

struct VerifyArgs {
    std::uint64_t seed = 7;
    std::size_t instances = 50;
    double kappa_scale = 1e4;
    std::string out;
};

int run_verify(const VerifyArgs& a) {
    const auto summary = run_equivalence_suite(a.seed, a.instances, a.kappa_scale);
    std::cout << "instances " << summary.instances << "\n"
              << "max peak gap " << summary.max_peak_gap << " kW\n"
              << "max arbitrage gap " << summary.max_arbitrage_gap << " (relative)\n";
    if (!a.out.empty()) {
        auto rows = nlohmann::json::array();
        for (const auto& r : summary.reports) {
            rows.push_back({{"peak_combined", r.peak_combined},
                            {"peak_two_stage", r.peak_two_stage},
                            {"arbitrage_combined", r.arbitrage_combined},
                            {"arbitrage_two_stage", r.arbitrage_two_stage},
                            {"kappa", r.kappa}});
        }
        write_json(a.out, {{"max_peak_gap", summary.max_peak_gap},
                           {"max_arbitrage_gap", summary.max_arbitrage_gap},
                           {"instances", rows}});
    }
    if (a.kappa_scale >= kEquivalenceMinScale && !summary.within(1e-6, 1e-6)) {
        throw VerificationFailed("two-stage and combined solutions differ beyond 1e-6");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery peak shaving and arbitrage: hindsight LPs, kernel controller, backtests"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("bess ") + BESS_VERSION + " (artifact schema " +
                                          std::to_string(kArtifactSchemaVersion) + ")");
    unsigned jobs = default_jobs();
    app.add_option("--jobs", jobs, "Worker threads (default: available cores)")->check(CLI::PositiveNumber);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate synthetic office demand and hourly prices");
    add_common(c_synth, synth.common);
    c_synth->add_option("--out-demand", synth.out_demand, "Demand CSV to write")->required();
    c_synth->add_option("--out-prices", synth.out_prices, "Price CSV to write");
    c_synth->add_option("--days", synth.days, "Number of days");
    c_synth->add_option("--seed", synth.seed, "Random seed (prices use seed + 1)");
    c_synth->add_option("--start", synth.start, "First day, YYYY-MM-DD");

    HindsightArgs hind;
    auto* c_hind = app.add_subcommand("hindsight", "Perfect-foresight targets or benchmark schedule");
    add_common(c_hind, hind.common);
    c_hind->add_option("--demand", hind.demand, "Demand CSV");
    c_hind->add_option("--prices", hind.prices, "Price CSV (benchmark mode)");
    c_hind->add_option("--mode", hind.mode, "targets or benchmark")
        ->check(CLI::IsMember({"targets", "benchmark"}));
    c_hind->add_option("--out", hind.out, "Output CSV")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Build the kernel model from historical demand");
    add_common(c_train, train.common);
    c_train->add_option("--demand", train.demand, "Historical demand CSV");
    c_train->add_option("--targets", train.targets, "Precomputed hindsight targets CSV (skips the LP solves)");
    c_train->add_option("--out", train.out, "Model file")->required();

    TrainArbArgs arb;
    auto* c_arb = app.add_subcommand("train-arb", "Fit the arbitrage value table on historical prices");
    add_common(c_arb, arb.common);
    c_arb->add_option("--prices", arb.prices, "Historical price CSV");
    c_arb->add_option("--out", arb.out, "Policy file")->required();

    BacktestArgs bt;
    auto* c_bt = app.add_subcommand("backtest", "Run the real-time controller over a test period");
    add_common(c_bt, bt.common);
    c_bt->add_option("--demand", bt.demand, "Test demand CSV");
    c_bt->add_option("--prices", bt.prices, "Test price CSV");
    c_bt->add_option("--model", bt.model, "Kernel model file")->required();
    c_bt->add_option("--arb", bt.arb, "Arbitrage policy file (omit for peak shaving only)");
    c_bt->add_option("--out", bt.out, "Schedule CSV")->required();
    c_bt->add_option("--report", bt.report, "Bill summary JSON");

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("backtest-sweep", "Hindsight vs controller over a battery size sweep");
    add_common(c_sweep, sweep.common);
    c_sweep->add_option("--demand", sweep.demand, "Demand CSV covering training and test");
    c_sweep->add_option("--prices", sweep.prices, "Price CSV covering training and test");
    c_sweep->add_option("--test-start", sweep.test_start, "First test day, YYYY-MM-DD");
    c_sweep->add_option("--sizes", sweep.sizes, "Comma-separated power ratings in kW");
    c_sweep->add_option("--out", sweep.out, "Report JSON")->required();
    c_sweep->add_option("--csv", sweep.csv, "Summary CSV");
    c_sweep->add_option("--peaks-csv", sweep.peaks_csv, "Monthly peaks CSV");

    TuneArgs tn;
    auto* c_tune = app.add_subcommand("tune", "Tiered search over look-back, kernel width and K");
    add_common(c_tune, tn.common);
    c_tune->add_option("--demand", tn.demand, "Demand CSV");
    c_tune->add_option("--prices", tn.prices, "Price CSV");
    c_tune->add_option("--out", tn.out, "Best kernel settings (config fragment)")->required();
    c_tune->add_option("--trace", tn.trace, "CSV of every evaluation");

    ReportArgs rep;
    auto* c_rep = app.add_subcommand("report", "Bill a stored schedule");
    add_common(c_rep, rep.common);
    c_rep->add_option("--in", rep.in, "Schedule CSV with timestamp and net_kw columns")->required();
    c_rep->add_option("--prices", rep.prices, "Price CSV (energy charges are zero without it)");
    c_rep->add_option("--out", rep.out, "Bill JSON")->required();

    VerifyArgs ver;
    auto* c_ver = app.add_subcommand("verify-prop1", "Check two-stage vs combined LP equivalence on random cases");
    c_ver->add_option("--seed", ver.seed, "Random seed");
    c_ver->add_option("--instances", ver.instances, "Number of instances")->check(CLI::PositiveNumber);
    c_ver->add_option("--kappa-scale", ver.kappa_scale, "Demand charge as a multiple of max price * dt * T");
    c_ver->add_option("--out", ver.out, "Per-instance JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    for (auto* c : {&synth.common, &hind.common, &train.common, &arb.common, &bt.common, &sweep.common, &tn.common,
                    &rep.common}) {
        c->jobs = jobs;
    }

    try {
        if (*c_synth) return run_synth(synth);
        if (*c_hind) return run_hindsight(hind);
        if (*c_train) return run_train(train);
        if (*c_arb) return run_train_arb(arb);
        if (*c_bt) return run_backtest(bt);
        if (*c_sweep) return run_sweep_cmd(sweep);
        if (*c_tune) return run_tune(tn);
        if (*c_rep) return run_report(rep);
        if (*c_ver) return run_verify(ver);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const OptimizationError& e) {
        std::cerr << "optimization error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const VerificationFailed& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kExitVerification;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
