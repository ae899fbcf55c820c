#pragma once

#include "apara/config.hpp"
#include "apara/report.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace apara {

namespace detail {

inline void check_chart(const AccuracyChart& chart, const OdeSystem& sys, Method method, double T,
                        const std::filesystem::path& path) {
    if (chart.system_id() != sys.name)
        throw ConfigError("chart " + path.string() + " was calibrated for system '" +
                          chart.system_id() + "', config needs '" + sys.name + "'");
    if (chart.method_id() != method_name(method))
        throw ConfigError("chart " + path.string() + " was calibrated for method '" +
                          chart.method_id() + "', config needs '" + method_name(method) + "'");
    if (chart.horizon() != T)
        throw ConfigError("chart " + path.string() + " was calibrated for T=" +
                          std::to_string(chart.horizon()) + ", config needs T=" + std::to_string(T));
}

inline AccuracyChart load_checked_chart(const std::filesystem::path& path, const OdeSystem& sys,
                                        Method method, double T) {
    if (!std::filesystem::exists(path))
        throw ConfigError("chart file does not exist: " + path.string() +
                          " (run the calibrate command first)");
    AccuracyChart chart = load_chart(path);
    check_chart(chart, sys, method, T, path);
    return chart;
}

inline CostModel effective_cost_model(const RunConfig& cfg, int dim) {
    CostModel m = cfg.cost_model;
    if (!cfg.weights_explicit) m.weights = CostWeights::for_dim(dim);
    return m;
}

/// The decomposition all commands agree on for a given (config, N). The
/// balance probe uses the configured coarse solver directly (not the
/// chart-calibrated one) so `calibrate` and `run` derive identical grids
/// and the chart transfers exactly.
inline TimePartition experiment_partition(const RunConfig& cfg, const OdeSystem& sys, int n) {
    return cfg.balance ? balance_partition(sys, cfg.T, n, cfg.coarse)
                       : TimePartition::uniform(cfg.T, n);
}

/// Measured cost of one sequential fine solve at accuracy eta/2 over [0,T].
inline double measure_sequential_cost(const OdeSystem& sys, const TimePartition& partition,
                                      const SolverConfig& fine, const AccuracyChart& chart_fine,
                                      double eta, const CostModel& model) {
    SolverConfig cfg = fine;
    cfg.atol = cfg.rtol = tol_for_accuracy(chart_fine, eta / 2.0);
    auto res = propagate(sys, 0.0, partition.total(), sys.u0, cfg);
    if (!res.ok()) throw std::runtime_error("sequential fine solve failed");
    return scalar_cost(res.cost, model.weights);
}

inline nlohmann::ordered_json run_to_json(const PararealRun& run, const CostModel& model) {
    nlohmann::ordered_json j;
    j["converged_at"] = run.converged_at ? nlohmann::ordered_json(*run.converged_at)
                                         : nlohmann::ordered_json(nullptr);
    j["diverged"] = run.diverged;
    j["failed"] = run.failed;
    if (!run.failure.empty()) j["failure"] = run.failure;
    j["rows"] = run.rows();
    j["K_planned"] = run.K_planned;
    if (!run.iterations.empty()) {
        const auto& last = run.iterations.back();
        if (std::isfinite(last.max_error)) j["final_max_error"] = last.max_error;
        if (std::isfinite(last.zeta)) j["final_zeta"] = last.zeta;
    }
    if (run.complete()) {
        const auto with = aggregate_cost_breakdown(run, model, true);
        const auto without = aggregate_cost_breakdown(run, model, false);
        j["cost_with_coarse"] = with.total;
        j["cost_without_coarse"] = without.total;
        j["coarse_cost"] = with.coarse;
        j["fine_critical_path"] = with.fine_critical;
        j["work_total"] = with.work_total;
    }
    j["pilot_cost_steps"] = run.pilot_cost.accepted_steps + run.pilot_cost.rejected_steps;
    j["pilot_cost_rhs"] = run.pilot_cost.rhs_evals;
    return j;
}

inline void write_history_csv(const std::filesystem::path& path, const PararealRun& run,
                              const CostModel& model) {
    std::vector<std::string> comments = {
        "apara run history",
        "system: " + run.system,
        "T: " + fmt_sci(run.T),
        "n_intervals: " + fmt_int(run.partition.intervals()),
        "eta: " + fmt_sci(run.eta),
        "eps_g: " + fmt_sci(run.eps_g),
        "schedule: " + schedule_mode_name(run.schedule.mode),
    };
    CsvWriter csv(path, comments,
                  {"k", "max_error", "zeta_k", "fine_cost", "coarse_cost", "increment", "fine_tol"});
    for (int k = 0; k < run.rows(); ++k) {
        const auto& rec = run.iterations[static_cast<std::size_t>(k)];
        double fine = 0.0, coarse = 0.0;
        for (const auto& c : rec.fine_cost) fine = std::max(fine, scalar_cost(c, model.weights));
        for (const auto& c : rec.coarse_cost) coarse += scalar_cost(c, model.weights);
        csv.write_row({fmt_int(k), fmt_sci(rec.max_error), fmt_sci(rec.zeta), fmt_sci(fine),
                       fmt_sci(coarse), fmt_sci(rec.increment), fmt_sci(rec.fine_tol)});
    }
}

struct PreparedExperiment {
    OdeSystem system;
    AccuracyChart chart_coarse;
    AccuracyChart chart_fine;
    CostModel model;
};

inline PreparedExperiment prepare_experiment(const RunConfig& cfg) {
    PreparedExperiment prep{system_from_config(cfg), {}, {}, {}};
    prep.chart_coarse =
        load_checked_chart(cfg.coarse_chart(), prep.system, cfg.coarse.method, cfg.T);
    if (!cfg.exact_fine)
        prep.chart_fine = load_checked_chart(cfg.fine_chart(), prep.system, cfg.fine.method, cfg.T);
    prep.model = effective_cost_model(cfg, prep.system.dim);
    return prep;
}

inline RunOptions base_options(const RunConfig& cfg, const PreparedExperiment& prep, int n_intervals,
                               double eta) {
    RunOptions opt;
    opt.T = cfg.T;
    opt.n_intervals = n_intervals;
    opt.eta = eta;
    opt.eps_g = cfg.eps_g;
    opt.mode = cfg.mode;
    opt.coarse = cfg.coarse;
    opt.fine = cfg.fine;
    opt.chart_coarse = &prep.chart_coarse;
    opt.chart_fine = cfg.exact_fine ? nullptr : &prep.chart_fine;
    opt.K = cfg.K;
    opt.K_max = cfg.K_max;
    opt.min_iterations = cfg.min_iterations;
    opt.balance = cfg.balance;
    opt.exact_fine = cfg.exact_fine;
    opt.workers = cfg.workers;
    return opt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

/// Builds and persists the tolerance-to-accuracy chart(s) for the configured
/// solvers on the configured problem and horizon.
inline int cmd_calibrate(const RunConfig& cfg) {
    OdeSystem sys = system_from_config(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const TimePartition grid = detail::experiment_partition(cfg, sys, cfg.n_intervals);
    const std::vector<Vec> reference = reference_solve(sys, cfg.T, grid);

    struct Job {
        Method method;
        std::vector<double> tols;
        std::filesystem::path path;
    };
    const std::vector<Job> jobs = {
        {cfg.coarse.method,
         cfg.calib_tol_coarse.empty() ? default_calibration_tolerances(cfg.coarse.method)
                                      : cfg.calib_tol_coarse,
         cfg.coarse_chart()},
        {cfg.fine.method,
         cfg.calib_tol_fine.empty() ? default_calibration_tolerances(cfg.fine.method)
                                    : cfg.calib_tol_fine,
         cfg.fine_chart()},
    };
    for (const auto& job : jobs) {
        CostCounters cost;
        AccuracyChart chart =
            build_chart(sys, job.method, cfg.T, job.tols, grid, reference, cfg.workers, &cost);
        if (!job.path.parent_path().empty()) std::filesystem::create_directories(job.path.parent_path());
        save_chart(chart, job.path);
        std::cout << "calibrated " << method_name(job.method) << " on " << sys.name
                  << " (T=" << cfg.T << "): " << chart.tol_samples().size() << " samples -> "
                  << job.path.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Executes the classical and/or adaptive run, writing per-iteration history
/// CSVs and a structured summary. Exit code 2 flags divergence/failure.
inline int cmd_run(const RunConfig& cfg) {
    auto prep = detail::prepare_experiment(cfg);
    const std::filesystem::path out = cfg.reports();
    std::filesystem::create_directories(out);

    RunOptions opt = detail::base_options(cfg, prep, cfg.n_intervals, cfg.eta);

    // One partition and one reference shared by both algorithms.
    const TimePartition partition = detail::experiment_partition(cfg, prep.system, cfg.n_intervals);
    const std::vector<Vec> reference = reference_solve(prep.system, cfg.T, partition);
    opt.partition = &partition;
    opt.reference = &reference;

    nlohmann::ordered_json summary;
    summary["problem"] = prep.system.name;
    summary["T"] = cfg.T;
    summary["n_intervals"] = cfg.n_intervals;
    summary["eta"] = cfg.eta;
    summary["eps_g"] = cfg.eps_g;
    summary["schedule"] = schedule_mode_name(cfg.mode);
    summary["algorithm"] = cfg.algorithm;
    summary["partition"] = partition.boundaries;

    bool all_converged = true;
    std::map<std::string, PararealRun> runs;
    if (cfg.algorithm == "adaptive" || cfg.algorithm == "both") {
        PararealRun run = run_adaptive(prep.system, opt);
        detail::write_history_csv(out / "history_adaptive.csv", run, prep.model);
        summary["adaptive"] = detail::run_to_json(run, prep.model);
        all_converged = all_converged && run.complete();
        runs.emplace("adaptive", std::move(run));
    }
    if (cfg.algorithm == "classical" || cfg.algorithm == "both") {
        PararealRun run = run_classical(prep.system, opt);
        detail::write_history_csv(out / "history_classical.csv", run, prep.model);
        summary["classical"] = detail::run_to_json(run, prep.model);
        all_converged = all_converged && run.complete();
        runs.emplace("classical", std::move(run));
    }

    if (all_converged) {
        const double cost_seq = detail::measure_sequential_cost(prep.system, partition, cfg.fine,
                                                                prep.chart_fine, cfg.eta, prep.model);
        summary["cost_seq"] = cost_seq;
        if (runs.count("adaptive") && runs.count("classical")) {
            const auto rep =
                speedup_report(runs.at("adaptive"), runs.at("classical"), cost_seq, prep.model);
            nlohmann::ordered_json s;
            s["speedup_ap_with_coarse"] = rep.speedup_ap_with;
            s["speedup_ap_without_coarse"] = rep.speedup_ap_without;
            s["speedup_cp_with_coarse"] = rep.speedup_cp_with;
            s["speedup_cp_without_coarse"] = rep.speedup_cp_without;
            s["efficiency_ap_with_coarse"] = rep.efficiency_ap_with;
            s["efficiency_ap_without_coarse"] = rep.efficiency_ap_without;
            s["efficiency_cp_with_coarse"] = rep.efficiency_cp_with;
            s["efficiency_cp_without_coarse"] = rep.efficiency_cp_without;
            summary["speedup"] = s;
        } else {
            for (auto& [name, run] : runs) {
                summary[name]["speedup_with_coarse"] = cost_seq / aggregate_cost(run, prep.model, true);
                summary[name]["speedup_without_coarse"] =
                    cost_seq / aggregate_cost(run, prep.model, false);
            }
        }
    }

    std::ofstream summary_file(out / "summary.json");
    summary_file << summary.dump(2) << "\n";
    for (const auto& [name, run] : runs) {
        std::cout << name << ": "
                  << (run.complete() ? "converged at k=" + std::to_string(*run.converged_at)
                                     : (run.failed ? "failed: " + run.failure : "diverged"))
                  << "\n";
    }
    return all_converged ? 0 : 2;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Runs classical + adaptive for each (N, eta) in the sweep lists and emits
/// one speedup/efficiency row per run. Individual failures become status
/// rows; the sweep continues.
inline int cmd_sweep(const RunConfig& cfg) {
    if (cfg.sweep_n.empty() || cfg.sweep_eta.empty())
        throw ConfigError("sweep: sweep.n_intervals and sweep.eta must be nonempty");
    auto prep = detail::prepare_experiment(cfg);
    const std::filesystem::path out = cfg.reports();
    std::filesystem::create_directories(out);

    CsvWriter csv(out / "speedup.csv",
                  {"apara speedup sweep", "system: " + prep.system.name, "T: " + fmt_sci(cfg.T),
                   "eps_g: " + fmt_sci(cfg.eps_g), "schedule: " + schedule_mode_name(cfg.mode)},
                  {"T", "n_intervals", "eta", "algorithm", "converged_at", "speedup_with_G",
                   "speedup_without_G", "efficiency_with_G", "efficiency_without_G", "status"});

    bool any_ok = false;
    for (int n : cfg.sweep_n) {
        const TimePartition partition = detail::experiment_partition(cfg, prep.system, n);
        const std::vector<Vec> reference = reference_solve(prep.system, cfg.T, partition);
        for (double eta : cfg.sweep_eta) {
            RunOptions opt = detail::base_options(cfg, prep, n, eta);
            opt.partition = &partition;
            opt.reference = &reference;
            double cost_seq = 0.0;
            try {
                cost_seq = detail::measure_sequential_cost(prep.system, partition, cfg.fine,
                                                           prep.chart_fine, eta, prep.model);
            } catch (const std::exception& e) {
                csv.write_row({fmt_sci(cfg.T), fmt_int(n), fmt_sci(eta), "both", "",
                               "", "", "", "", std::string("seq_failed")});
                continue;
            }
            for (const std::string algorithm : {"adaptive", "classical"}) {
                PararealRun run = algorithm == "adaptive" ? run_adaptive(prep.system, opt)
                                                          : run_classical(prep.system, opt);
                if (!run.complete()) {
                    csv.write_row({fmt_sci(cfg.T), fmt_int(n), fmt_sci(eta), algorithm, "", "", "",
                                   "", "", run.failed ? "failed" : "diverged"});
                    continue;
                }
                any_ok = true;
                const double with = aggregate_cost(run, prep.model, true);
                const double without = aggregate_cost(run, prep.model, false);
                csv.write_row({fmt_sci(cfg.T), fmt_int(n), fmt_sci(eta), algorithm,
                               fmt_int(*run.converged_at), fmt_sci(cost_seq / with),
                               fmt_sci(cost_seq / without), fmt_sci(cost_seq / with / n),
                               fmt_sci(cost_seq / without / n), "ok"});
            }
        }
    }
    return any_ok ? 0 : 2;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

/// Estimates the hypothesis constants, runs the scheduled algorithm and
/// tabulates observed errors against the convergence bounds, plus the ideal
/// efficiency of the synthetic cost model.
inline int cmd_bounds(const RunConfig& cfg) {
    auto prep = detail::prepare_experiment(cfg);
    const std::filesystem::path out = cfg.reports();
    std::filesystem::create_directories(out);

    const TimePartition partition = detail::experiment_partition(cfg, prep.system, cfg.n_intervals);
    const std::vector<Vec> reference = reference_solve(prep.system, cfg.T, partition);

    const HypothesisConstants raw =
        estimate_constants(prep.system, cfg.T, partition, cfg.coarse, prep.chart_coarse, cfg.eps_g,
                           reference, cfg.bounds_samples, cfg.seed);
    const HypothesisConstants consts = raw.inflated(cfg.bounds_inflation);

    RunOptions opt = detail::base_options(cfg, prep, cfg.n_intervals, cfg.eta);
    opt.partition = &partition;
    opt.reference = &reference;
    PararealRun run = run_adaptive(prep.system, opt);
    if (!run.complete()) {
        std::cerr << "bounds: run did not converge ("
                  << (run.failed ? run.failure : std::string("diverged")) << ")\n";
        return 2;
    }

    CsvWriter csv(
        out / "bounds.csv",
        {"apara convergence bounds", "system: " + prep.system.name, "T: " + fmt_sci(cfg.T),
         "eps_g: " + fmt_sci(cfg.eps_g), "inflation: " + fmt_sci(cfg.bounds_inflation),
         "C_c: " + fmt_sci(raw.C_c) + " (inflated " + fmt_sci(consts.C_c) + ")",
         "C_d: " + fmt_sci(raw.C_d) + " (inflated " + fmt_sci(consts.C_d) + ")",
         "tau: " + fmt_sci(consts.tau) + " tau_tilde: " + fmt_sci(consts.tau_tilde) +
             " mu: " + fmt_sci(consts.mu) + " eps_bar: " + fmt_sci(consts.eps_bar),
         "prop31 ideal efficiency (alpha=" + fmt_sci(cfg.cost_model.alpha) +
             "): " + fmt_sci(ideal_efficiency(cfg.eps_g, cfg.cost_model.alpha))},
        {"k", "observed_error", "ideal_bound", "perturbed_bound"});
    for (int k = 0; k <= *run.converged_at; ++k) {
        csv.write_row({fmt_int(k), fmt_sci(run.iterations[static_cast<std::size_t>(k)].max_error),
                       fmt_sci(ideal_bound(consts, k)), fmt_sci(perturbed_bound(consts, k))});
    }
    std::cout << "bounds: " << (*run.converged_at + 1) << " rows -> "
              << (out / "bounds.csv").string() << "\n";
    return 0;
}

}  // namespace apara
