#pragma once

#include "apara/calibration.hpp"
#include "apara/executor.hpp"
#include "apara/integrate.hpp"
#include "apara/problems.hpp"
#include "apara/schedule.hpp"

#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace apara {

/// Coarse propagation failure; aborts the run with the offending interval.
struct CoarseFailure : std::runtime_error {
    CoarseFailure(int interval_, const std::string& what_) : std::runtime_error(what_), interval(interval_) {}
    int interval;
};

// ---------------------------------------------------------------------------
// Load balancing
// ---------------------------------------------------------------------------

/// Chooses subinterval boundaries so each contains an equal share of the
/// accepted steps of one sequential coarse propagation (equal predicted
/// work). Falls back to the uniform partition when the coarse run fails or
/// yields too few steps to resolve the density.
inline TimePartition balance_partition(const OdeSystem& system, double T, int n_intervals,
                                       const SolverConfig& cfg_coarse,
                                       CostCounters* cost = nullptr) {
    require(T > 0.0 && n_intervals >= 1, "balance_partition: need T > 0 and N >= 1");
    if (n_intervals == 1) return TimePartition{{0.0, T}};

    // Probe the step density; tighten the probe tolerance if the coarse run
    // is too sparse to resolve n_intervals quantiles.
    WarmStartHistory rec;
    SolverConfig probe = cfg_coarse;
    bool usable = false;
    for (int attempt = 0; attempt < 3 && !usable; ++attempt) {
        rec.reset(1);
        WarmStartContext ws;
        ws.write = &rec;
        PropagationResult res;
        try {
            res = propagate(system, 0.0, T, system.u0, probe, &ws);
        } catch (const std::exception& e) {
            std::cerr << "[apara] balance_partition: coarse probe threw (" << e.what()
                      << "); using uniform partition\n";
            return TimePartition::uniform(T, n_intervals);
        }
        if (cost) *cost += res.cost;
        usable = res.ok() && rec.intervals[0].size() >= 2 * static_cast<std::size_t>(n_intervals);
        if (!usable) probe.atol = probe.rtol = std::max(probe.atol * 1e-2, 1e-13);
    }
    const auto& nodes = rec.intervals[0];
    if (!usable) {
        std::cerr << "[apara] balance_partition: coarse probe unusable (" << nodes.size()
                  << " steps); using uniform partition\n";
        return TimePartition::uniform(T, n_intervals);
    }

    std::vector<double> times;
    times.reserve(nodes.size() + 1);
    times.push_back(0.0);
    for (const auto& nd : nodes) times.push_back(nd.t);
    const std::size_t steps = times.size() - 1;

    TimePartition p;
    p.boundaries.assign(static_cast<std::size_t>(n_intervals) + 1, 0.0);
    p.boundaries.back() = T;
    for (int i = 1; i < n_intervals; ++i) {
        const double target = static_cast<double>(i) * static_cast<double>(steps) / n_intervals;
        const auto idx = static_cast<std::size_t>(target);
        const double frac = target - static_cast<double>(idx);
        p.boundaries[static_cast<std::size_t>(i)] =
            times[idx] + frac * (times[idx + 1] - times[idx]);
    }
    for (int i = 1; i <= n_intervals; ++i) {
        if (p.boundaries[static_cast<std::size_t>(i)] <= p.boundaries[static_cast<std::size_t>(i) - 1]) {
            std::cerr << "[apara] balance_partition: degenerate quantiles; using uniform partition\n";
            return TimePartition::uniform(T, n_intervals);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Sweeps and stages
// ---------------------------------------------------------------------------

struct CoarseSweepResult {
    std::vector<Vec> row;                 // y^N_{k+1} for N = 0..N̲
    std::vector<CostCounters> cost;       // per interval
};

/// Per-run state the sweeps thread through: the cached coarse values
/// G(T_N, y^N_k) of the previous sweep and the per-interval starting step
/// sizes learned during sweep 0. Freezing h_init keeps G a fixed
/// deterministic map across iterations while avoiding the step-size ramp on
/// every restart.
struct CoarsePlan {
    std::vector<Vec> g;
    std::vector<double> h_init;
};

/// Sequential coarse sweep. Iteration 0 (no corrections): pure coarse
/// propagation from u0. Later iterations apply the parareal correction
///   y^{N+1}_{k+1} = G(T_N, y^N_{k+1}) + F^N_k - G(T_N, y^N_k),
/// where G(T_N, y^N_k) comes from `plan->g` (filled by the previous sweep)
/// or is recomputed from `prev_row` when no plan is supplied.
inline CoarseSweepResult coarse_sweep(const OdeSystem& system, const TimePartition& partition,
                                      const SolverConfig& cfg_coarse,
                                      const std::vector<Vec>* prev_row,
                                      const std::vector<Vec>* fine_corrections,
                                      CoarsePlan* plan = nullptr) {
    const int n = partition.intervals();
    CoarseSweepResult out;
    out.row.assign(static_cast<std::size_t>(n) + 1, Vec());
    out.cost.assign(static_cast<std::size_t>(n), CostCounters{});
    out.row[0] = system.u0;
    if (plan && plan->h_init.size() != static_cast<std::size_t>(n))
        plan->h_init.assign(static_cast<std::size_t>(n), 0.0);

    std::vector<Vec> new_cache(static_cast<std::size_t>(n));
    auto coarse = [&](int N, const Vec& y) {
        SolverConfig cfg = cfg_coarse;
        if (plan && plan->h_init[static_cast<std::size_t>(N)] > 0.0)
            cfg.h_init = plan->h_init[static_cast<std::size_t>(N)];
        auto res = propagate(system, partition.boundaries[static_cast<std::size_t>(N)],
                             partition.length(N), y, cfg);
        out.cost[static_cast<std::size_t>(N)] += res.cost;
        if (!res.ok()) {
            throw CoarseFailure(N, "coarse propagation failed (" +
                                       std::string(to_string(res.status)) + ") on interval " +
                                       std::to_string(N));
        }
        if (plan && plan->h_init[static_cast<std::size_t>(N)] == 0.0 && res.h_first > 0.0)
            plan->h_init[static_cast<std::size_t>(N)] = res.h_first;
        return res.y_end;
    };

    if (!fine_corrections) {
        for (int N = 0; N < n; ++N) {
            new_cache[static_cast<std::size_t>(N)] = coarse(N, out.row[static_cast<std::size_t>(N)]);
            out.row[static_cast<std::size_t>(N) + 1] = new_cache[static_cast<std::size_t>(N)];
        }
    } else {
        require(fine_corrections->size() == static_cast<std::size_t>(n),
                "coarse_sweep: corrections size mismatch");
        const bool have_cache = plan && plan->g.size() == static_cast<std::size_t>(n);
        require(have_cache || (prev_row && prev_row->size() == static_cast<std::size_t>(n) + 1),
                "coarse_sweep: need previous coarse values or the previous row");
        for (int N = 0; N < n; ++N) {
            const Vec g_new = coarse(N, out.row[static_cast<std::size_t>(N)]);
            const Vec g_old = have_cache ? plan->g[static_cast<std::size_t>(N)]
                                         : coarse(N, (*prev_row)[static_cast<std::size_t>(N)]);
            out.row[static_cast<std::size_t>(N) + 1] =
                g_new + (*fine_corrections)[static_cast<std::size_t>(N)] - g_old;
            new_cache[static_cast<std::size_t>(N)] = g_new;
        }
    }
    if (plan) plan->g = std::move(new_cache);
    return out;
}

struct FineStageResult {
    std::vector<Vec> corrections;     // F^N_k (valid where ok[N])
    std::vector<CostCounters> cost;   // per interval
    std::vector<char> ok;
    std::vector<double> h_first;      // first accepted step per interval
    bool failed = false;
    int first_failed = -1;
    double tol = 0.0;                 // tolerance used (uniform zeta rows)
    bool clamped = false;             // chart could not reach the requested accuracy
};

/// Concurrent fine propagations of row k over every subinterval at accuracy
/// zeta^N_k (realized through the chart, or at the reference tolerance when
/// `exact_fine`). Failures mark the stage failed; partial results and their
/// costs are retained for diagnostics.
inline FineStageResult fine_stage(const OdeSystem& system, const TimePartition& partition,
                                  const std::vector<Vec>& row,
                                  const std::vector<double>& zeta_row,
                                  const AccuracyChart* chart, const SolverConfig& cfg_fine,
                                  const WarmStartHistory* history_read,
                                  WarmStartHistory* history_write, int iteration_k,
                                  int workers = 0, bool exact_fine = false) {
    const int n = partition.intervals();
    require(row.size() == static_cast<std::size_t>(n) + 1, "fine_stage: row size mismatch");
    require(zeta_row.size() == static_cast<std::size_t>(n), "fine_stage: zeta row size mismatch");
    require(exact_fine || chart != nullptr, "fine_stage: chart required unless exact_fine");

    FineStageResult out;
    out.corrections.assign(static_cast<std::size_t>(n), Vec());
    out.cost.assign(static_cast<std::size_t>(n), CostCounters{});
    out.ok.assign(static_cast<std::size_t>(n), 0);
    out.h_first.assign(static_cast<std::size_t>(n), 0.0);
    if (history_write) history_write->reset(n);

    std::vector<double> tols(static_cast<std::size_t>(n));
    for (int N = 0; N < n; ++N) {
        require(zeta_row[static_cast<std::size_t>(N)] > 0.0, "fine_stage: zeta must be positive");
        if (exact_fine) {
            tols[static_cast<std::size_t>(N)] = kReferenceTol;
        } else {
            bool clamped = false;
            tols[static_cast<std::size_t>(N)] =
                tol_for_accuracy(*chart, zeta_row[static_cast<std::size_t>(N)], &clamped);
            out.clamped = out.clamped || clamped;
        }
    }
    out.tol = tols[0];
    if (out.clamped) {
        std::cerr << "[apara] fine_stage: requested accuracy outside chart range; "
                     "tolerance clamped\n";
    }

    parallel_for(n, workers, [&](int N) {
        SolverConfig cfg = cfg_fine;
        cfg.atol = cfg.rtol = tols[static_cast<std::size_t>(N)];
        WarmStartContext ws;
        ws.read = history_read;
        ws.write = history_write;
        ws.interval = N;
        ws.iteration = iteration_k;
        auto res = propagate(system, partition.boundaries[static_cast<std::size_t>(N)],
                             partition.length(N), row[static_cast<std::size_t>(N)], cfg, &ws);
        out.cost[static_cast<std::size_t>(N)] = res.cost;
        out.corrections[static_cast<std::size_t>(N)] = std::move(res.y_end);
        out.ok[static_cast<std::size_t>(N)] = res.ok() ? 1 : 0;
        out.h_first[static_cast<std::size_t>(N)] = res.h_first;
    });
    for (int N = 0; N < n; ++N) {
        if (!out.ok[static_cast<std::size_t>(N)]) {
            out.failed = true;
            out.first_failed = N;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full runs
// ---------------------------------------------------------------------------

struct IterationRecord {
    double zeta = std::numeric_limits<double>::quiet_NaN();      // fine accuracy behind this row
    double fine_tol = std::numeric_limits<double>::quiet_NaN();  // realized solver tolerance
    double max_error = std::numeric_limits<double>::quiet_NaN(); // vs reference, when available
    double increment = std::numeric_limits<double>::quiet_NaN(); // vs previous row
    std::vector<CostCounters> coarse_cost;  // per interval (sweep producing this row)
    std::vector<CostCounters> fine_cost;    // per interval (empty for row 0)
};

/// Iteration-indexed record of one parareal run: the state matrix y^N_k,
/// per-iteration errors/costs, the schedule used and where it stopped.
struct PararealRun {
    std::string system;
    double T = 0.0;
    double eta = 0.0;
    double eps_g = 0.0;
    TimePartition partition;
    ToleranceSchedule schedule;
    std::vector<std::vector<Vec>> states;     // states[k][N]
    std::vector<IterationRecord> iterations;  // one per row
    std::optional<int> converged_at;
    bool failed = false;
    bool diverged = false;
    std::string failure;
    int K_planned = 0;
    CostCounters pilot_cost;  // practical-K rehearsal, reported separately
    bool exact_fine = false;

    int rows() const { return static_cast<int>(states.size()); }
    bool complete() const { return !failed && converged_at.has_value(); }
};

struct RunOptions {
    double T = 0.0;
    int n_intervals = 0;
    double eta = 1e-8;
    double eps_g = 0.1;
    ScheduleMode mode = ScheduleMode::Practical;
    SolverConfig coarse = solver_at(Method::ExplicitRk54, 1e-4);
    SolverConfig fine = solver_at(Method::RadauIia5, 1e-8);
    const AccuracyChart* chart_coarse = nullptr;
    const AccuracyChart* chart_fine = nullptr;
    std::optional<int> K;          // practical-mode override; otherwise pilot-estimated
    int K_max = 0;                 // 0 -> 2 * n_intervals
    int min_iterations = 0;        // do not certify convergence before this many fine stages
    bool balance = true;
    bool exact_fine = false;
    int workers = 0;
    bool record_errors = true;     // compute a reference and log true errors
    const TimePartition* partition = nullptr;        // explicit partition override
    const std::vector<Vec>* reference = nullptr;     // must match `partition` if given
    std::vector<double> nu;        // theoretical-mode nu_k seed
};

namespace detail {

inline double row_distance(const OdeSystem& sys, const std::vector<Vec>& a,
                           const std::vector<Vec>& b) {
    double m = 0.0;
    for (std::size_t N = 1; N < a.size(); ++N) m = std::max(m, state_norm(sys, a[N] - b[N]));
    return m;
}

inline double row_error(const OdeSystem& sys, const std::vector<Vec>& row,
                        const std::vector<Vec>& ref) {
    double m = 0.0;
    for (std::size_t N = 1; N < row.size(); ++N) m = std::max(m, state_norm(sys, row[N] - ref[N]));
    return m;
}

/// Iteration-count predictor for the practical schedule: a classical
/// rehearsal whose fine surrogate is the coarse method at accuracy eps_g^2.
/// The contraction rate of the increments extrapolates K(eta); capped at N̲.
inline int pilot_iteration_count(const OdeSystem& sys, const TimePartition& partition,
                                 const SolverConfig& coarse_cfg, const AccuracyChart& chart_coarse,
                                 double eps_g, double eta, CostCounters* cost) {
    const int n = partition.intervals();
    SolverConfig surrogate = coarse_cfg;
    surrogate.atol = surrogate.rtol = tol_for_accuracy(chart_coarse, eps_g * eps_g);

    auto sweep_cost = [&](const std::vector<CostCounters>& cs) {
        if (cost)
            for (const auto& c : cs) *cost += c;
    };

    std::vector<double> increments;
    try {
        CoarsePlan plan;
        auto sweep = coarse_sweep(sys, partition, coarse_cfg, nullptr, nullptr, &plan);
        sweep_cost(sweep.cost);
        std::vector<Vec> prev = std::move(sweep.row);
        const int pilot_rows = std::min(n, 8);
        for (int k = 0; k < pilot_rows; ++k) {
            std::vector<Vec> corr(static_cast<std::size_t>(n));
            for (int N = 0; N < n; ++N) {
                auto res = propagate(sys, partition.boundaries[static_cast<std::size_t>(N)],
                                     partition.length(N), prev[static_cast<std::size_t>(N)],
                                     surrogate);
                if (cost) *cost += res.cost;
                if (!res.ok()) return std::max(2, n / 2);
                corr[static_cast<std::size_t>(N)] = std::move(res.y_end);
            }
            auto next = coarse_sweep(sys, partition, coarse_cfg, &prev, &corr, &plan);
            sweep_cost(next.cost);
            increments.push_back(row_distance(sys, next.row, prev));
            prev = std::move(next.row);
            if (increments.back() < eps_g * eps_g) break;  // below surrogate resolution
        }
    } catch (const CoarseFailure&) {
        return std::max(2, n / 2);
    }

    double log_rate_sum = 0.0;
    int rate_count = 0;
    for (std::size_t j = 1; j < increments.size(); ++j) {
        if (increments[j] > 0.0 && increments[j - 1] > 0.0 && increments[j] < increments[j - 1]) {
            log_rate_sum += std::log(increments[j] / increments[j - 1]);
            ++rate_count;
        }
    }
    if (increments.empty()) return std::max(2, n / 2);
    const double rho = rate_count > 0 ? std::exp(log_rate_sum / rate_count) : eps_g;
    const double rho_c = std::clamp(rho, 1e-6, 0.95);
    const double inc0 = std::max(increments.front(), eta);
    const int K = static_cast<int>(std::ceil(std::log((eta / 4.0) / inc0) / std::log(rho_c)));
    // The increment-based stopping rule trails the schedule by ~3 rows once
    // zeta reaches eta/2, so end the ladder early to land K_AP near K_CP.
    // Also cap K so the tolerance ladder descends faster than the measured
    // contraction; a slower ladder makes the iteration chase its own fine
    // noise instead of converging.
    const double ladder_decades = std::log10(eps_g / (eta / 2.0));
    const double contraction_decades = -std::log10(rho_c);
    const int K_chase =
        std::max(2, static_cast<int>(0.8 * ladder_decades / std::max(contraction_decades, 0.05)));
    return std::clamp(std::min(K - 3, K_chase), 2, n);
}

}  // namespace detail

/// Adaptive (or, with mode == Fixed, classical) parareal run: alternates
/// coarse sweeps and concurrent fine stages with the scheduled accuracies
/// zeta_k until the stopping criterion certifies eta or K_max is reached.
/// Stopping: max_N ||y^N_k - y^N_{k-1}|| <= eta/4 and zeta_{k-1} <= eta/2
/// (at k = 0: eps_g <= eta/2). True errors vs the reference are recorded for
/// reporting only.
inline PararealRun run_adaptive(const OdeSystem& system, const RunOptions& opt) {
    require(opt.T > 0.0, "run: T must be positive");
    require(opt.n_intervals >= 1, "run: n_intervals must be >= 1");
    require(opt.eta > 0.0, "run: eta must be positive");
    require(opt.eps_g > 0.0, "run: eps_g must be positive");
    require(opt.chart_coarse != nullptr, "run: coarse chart required");
    require(opt.exact_fine || opt.chart_fine != nullptr, "run: fine chart required");

    PararealRun run;
    run.system = system.name;
    run.T = opt.T;
    run.eta = opt.eta;
    run.eps_g = opt.eps_g;
    run.exact_fine = opt.exact_fine;

    if (opt.partition) {
        run.partition = *opt.partition;
        run.partition.validate();
        require(run.partition.total() == opt.T && run.partition.intervals() == opt.n_intervals,
                "run: supplied partition does not match T / n_intervals");
    } else if (opt.balance) {
        run.partition = balance_partition(system, opt.T, opt.n_intervals, opt.coarse);
    } else {
        run.partition = TimePartition::uniform(opt.T, opt.n_intervals);
    }
    const int n = run.partition.intervals();

    SolverConfig coarse_cfg = opt.coarse;
    coarse_cfg.atol = coarse_cfg.rtol = tol_for_accuracy(*opt.chart_coarse, opt.eps_g);

    // Reference for the true-error history (measurement only; not costed).
    std::vector<Vec> reference;
    const std::vector<Vec>* ref = nullptr;
    if (opt.reference) {
        require(opt.partition != nullptr, "run: external reference requires an explicit partition");
        require(opt.reference->size() == run.partition.boundaries.size(),
                "run: reference does not match the partition");
        ref = opt.reference;
    } else if (opt.record_errors) {
        reference = reference_solve(system, opt.T, run.partition);
        ref = &reference;
    }

    run.schedule.mode = opt.mode;
    run.schedule.eps_g = opt.eps_g;
    run.schedule.eta = opt.eta;
    run.schedule.nu = opt.nu;
    if (opt.mode == ScheduleMode::Practical) {
        run.schedule.K = opt.K ? *opt.K
                               : detail::pilot_iteration_count(system, run.partition, coarse_cfg,
                                                               *opt.chart_coarse, opt.eps_g,
                                                               opt.eta, &run.pilot_cost);
        run.K_planned = run.schedule.K;
    }
    run.schedule.validate();

    const int k_max = opt.K_max > 0 ? opt.K_max : 2 * n;
    const double ref_scale = [&] {
        if (!ref) return 1.0;
        double m = 0.0;
        for (const auto& u : *ref) m = std::max(m, 1.0 + state_norm(system, u));
        return m;
    }();

    CoarsePlan coarse_plan;
    WarmStartHistory hist_a, hist_b;
    WarmStartHistory* hist_prev = &hist_a;
    WarmStartHistory* hist_next = &hist_b;
    try {
        auto sweep0 = coarse_sweep(system, run.partition, coarse_cfg, nullptr, nullptr, &coarse_plan);
        run.states.push_back(std::move(sweep0.row));
        IterationRecord rec0;
        rec0.coarse_cost = std::move(sweep0.cost);
        if (ref) rec0.max_error = detail::row_error(system, run.states[0], *ref);
        run.iterations.push_back(std::move(rec0));
    } catch (const CoarseFailure& e) {
        run.failed = true;
        run.failure = e.what();
        return run;
    }

    if (opt.eps_g <= opt.eta / 2.0 && opt.min_iterations == 0) {
        run.converged_at = 0;
        return run;
    }

    for (int k = 0; k < k_max; ++k) {
        ToleranceSchedule sched = run.schedule;
        if (sched.mode == ScheduleMode::Theoretical && ref) {
            // nu_k tends to 1; refresh it from the current iterate when a
            // reference is available.
            double m = 0.0;
            for (const auto& y : run.states.back()) m = std::max(m, 1.0 + state_norm(system, y));
            sched.nu.resize(static_cast<std::size_t>(k) + 1, 1.0);
            sched.nu[static_cast<std::size_t>(k)] = std::max(m / ref_scale, 1e-6);
            run.schedule.nu = sched.nu;
        }
        const double zeta_k = schedule_zeta(sched, k);
        std::vector<double> zrow(static_cast<std::size_t>(n), zeta_k);

        auto fine = fine_stage(system, run.partition, run.states.back(), zrow, opt.chart_fine,
                               opt.fine, k > 0 ? hist_prev : nullptr, hist_next, k, opt.workers,
                               opt.exact_fine);
        IterationRecord rec;
        rec.zeta = zeta_k;
        rec.fine_tol = fine.tol;
        rec.fine_cost = std::move(fine.cost);
        if (fine.failed) {
            run.failed = true;
            run.failure = "fine propagation failed on interval " + std::to_string(fine.first_failed) +
                          " at iteration " + std::to_string(k);
            run.iterations.push_back(std::move(rec));
            return run;
        }

        try {
            auto sweep = coarse_sweep(system, run.partition, coarse_cfg, nullptr,
                                      &fine.corrections, &coarse_plan);
            rec.coarse_cost = std::move(sweep.cost);
            rec.increment = detail::row_distance(system, sweep.row, run.states.back());
            if (ref) rec.max_error = detail::row_error(system, sweep.row, *ref);
            run.states.push_back(std::move(sweep.row));
            run.iterations.push_back(std::move(rec));
        } catch (const CoarseFailure& e) {
            run.failed = true;
            run.failure = e.what();
            run.iterations.push_back(std::move(rec));
            return run;
        }

        std::swap(hist_prev, hist_next);
        if (run.iterations.back().increment <= opt.eta / 4.0 && zeta_k <= opt.eta / 2.0 &&
            k + 1 >= opt.min_iterations) {
            run.converged_at = k + 1;
            break;
        }
    }
    if (!run.converged_at) run.diverged = true;
    return run;
}

/// Classical parareal: the fixed-accuracy special case zeta_k = eta/2.
inline PararealRun run_classical(const OdeSystem& system, RunOptions opt) {
    opt.mode = ScheduleMode::Fixed;
    return run_adaptive(system, opt);
}

// ---------------------------------------------------------------------------
// Hypothesis constants
// ---------------------------------------------------------------------------

/// Empirical estimates of the stability/accuracy constants of the coarse
/// solver, with the derived convergence quantities.
struct HypothesisConstants {
    double C_c = 0.0;
    double C_d = 0.0;
    double eps_g = 0.0;
    double eps_bar = 0.0;    // e^{C_c dT} / (C_d T)
    double tau = 0.0;        // C_d T e^{-C_c dT} eps_g  (= eps_g / eps_bar)
    double tau_tilde = 0.0;  // tau + eps_g
    double mu = 0.0;         // e^{C_c T} / C_d * max_N (1 + ||u(T_N)||)
    double T = 0.0;
    double dT = 0.0;
    double state_scale = 1.0;  // max_N (1 + ||u(T_N)||)

    void derive() {
        eps_bar = std::exp(C_c * dT) / (C_d * T);
        tau = C_d * T * std::exp(-C_c * dT) * eps_g;
        tau_tilde = tau + eps_g;
        mu = std::exp(C_c * T) / C_d * state_scale;
    }
    /// Safety-inflated copy (both Lipschitz constants scaled, deriveds redone).
    HypothesisConstants inflated(double factor) const {
        HypothesisConstants h = *this;
        h.C_c *= factor;
        h.C_d *= factor;
        h.derive();
        return h;
    }
};

/// Samples state pairs near the reference trajectory and measures the
/// Lipschitz quotient of G (for C_c) and of deltaG = E - G (for C_d), with E
/// realized by the reference solver. Degenerate pairs are skipped.
inline HypothesisConstants estimate_constants(
    const OdeSystem& system, double T, const TimePartition& partition,
    const std::function<Vec(double, double, const Vec&)>& coarse_prop, double eps_g,
    const std::vector<Vec>& reference, int n_samples, std::uint64_t seed = 0) {
    require(n_samples >= 10, "estimate_constants: need n_samples >= 10");
    require(reference.size() == partition.boundaries.size(),
            "estimate_constants: reference does not match the partition");
    const int n = partition.intervals();
    require(n >= 1, "estimate_constants: empty partition");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> mag(0.1, 1.0);

    const SolverConfig ref_cfg = reference_config();
    auto exact_prop = [&](double t, double s, const Vec& w) {
        auto res = propagate(system, t, s, w, ref_cfg);
        require(res.ok(), "estimate_constants: reference propagation failed");
        return res.y_end;
    };

    double cc = 0.0, cd = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const int N = i % n;
        const double t = partition.boundaries[static_cast<std::size_t>(N)];
        const double s = partition.length(N);
        const Vec& base = reference[static_cast<std::size_t>(N)];
        const double scale = 0.05 * (1.0 + state_norm(system, base));
        Vec dx(system.dim), dy(system.dim);
        for (int j = 0; j < system.dim; ++j) dx[j] = unit(rng);
        for (int j = 0; j < system.dim; ++j) dy[j] = unit(rng);
        const Vec x = base + (scale * mag(rng)) * dx;
        const Vec y = base + (scale * mag(rng)) * dy;
        const double dist = state_norm(system, x - y);
        if (dist < 1e-12) continue;

        const Vec gx = coarse_prop(t, s, x);
        const Vec gy = coarse_prop(t, s, y);
        cc = std::max(cc, (state_norm(system, gx - gy) / dist - 1.0) / s);
        const Vec dgx = exact_prop(t, s, x) - gx;
        const Vec dgy = exact_prop(t, s, y) - gy;
        cd = std::max(cd, state_norm(system, dgx - dgy) / (s * eps_g * dist));
    }

    HypothesisConstants h;
    h.C_c = std::max(cc, 1e-8);
    h.C_d = std::max(cd, 1e-12);
    h.eps_g = eps_g;
    h.T = T;
    h.dT = T / n;
    double m = 0.0;
    for (const auto& u : reference) m = std::max(m, 1.0 + state_norm(system, u));
    h.state_scale = m;
    h.derive();
    return h;
}

/// Convenience overload: the coarse solver given as a calibrated SolverConfig.
inline HypothesisConstants estimate_constants(const OdeSystem& system, double T,
                                              const TimePartition& partition,
                                              const SolverConfig& cfg_coarse,
                                              const AccuracyChart& chart_coarse, double eps_g,
                                              const std::vector<Vec>& reference, int n_samples,
                                              std::uint64_t seed = 0) {
    SolverConfig cfg = cfg_coarse;
    cfg.atol = cfg.rtol = tol_for_accuracy(chart_coarse, eps_g);
    auto prop = [&system, cfg](double t, double s, const Vec& w) {
        auto res = propagate(system, t, s, w, cfg);
        require(res.ok(), "estimate_constants: coarse propagation failed");
        return res.y_end;
    };
    return estimate_constants(system, T, partition, prop, eps_g, reference, n_samples, seed);
}

}  // namespace apara
