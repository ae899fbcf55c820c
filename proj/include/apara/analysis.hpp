#pragma once

#include "apara/parareal.hpp"

#include <cmath>

namespace apara {

/// Scalar weights turning heterogeneous counters into one work unit.
/// Defaults follow the usual dense-linear-algebra scaling with the system
/// dimension (Jacobian ~ dim rhs evaluations, one solve ~ dim^2).
struct CostWeights {
    double accepted_steps = 1.0;
    double rejected_steps = 0.0;
    double rhs_evals = 1.0;
    double jac_evals = 2.0;
    double lin_solves = 4.0;

    static CostWeights for_dim(int dim) {
        CostWeights w;
        w.jac_evals = static_cast<double>(dim);
        w.lin_solves = static_cast<double>(dim) * dim;
        return w;
    }
};

inline double scalar_cost(const CostCounters& c, const CostWeights& w) {
    return w.accepted_steps * static_cast<double>(c.accepted_steps) +
           w.rejected_steps * static_cast<double>(c.rejected_steps) +
           w.rhs_evals * static_cast<double>(c.rhs_evals) +
           w.jac_evals * static_cast<double>(c.jac_evals) +
           w.lin_solves * static_cast<double>(c.lin_solves);
}

struct CostModel {
    enum class Mode { Measured, Synthetic };
    Mode mode = Mode::Measured;
    double alpha = 1.0;       // synthetic cost order: f = dT * zeta^(-1/alpha)
    CostWeights weights;      // measured mode
    double comm_delay = 0.0;  // additive per-iteration constant

    void validate() const {
        require(alpha > 0.0, "cost model: alpha must be positive");
        require(weights.accepted_steps >= 0 && weights.rejected_steps >= 0 &&
                    weights.rhs_evals >= 0 && weights.jac_evals >= 0 && weights.lin_solves >= 0,
                "cost model: weights must be nonnegative");
    }
};

struct CostBreakdown {
    double total = 0.0;          // critical-path parallel cost
    double coarse = 0.0;         // sequential coarse share
    double fine_critical = 0.0;  // sum over stages of max-over-intervals fine cost
    double fine_work = 0.0;      // sum over stages of total fine work
    double work_total = 0.0;     // coarse + fine_work (+ delays)
    int iterations = 0;          // K = converged_at
};

/// Parallel cost model: coarse sweeps are sequential over N
/// for k = 0..K, fine stages cost their slowest interval for k = 0..K-1.
inline CostBreakdown aggregate_cost_breakdown(const PararealRun& run, const CostModel& model,
                                              bool include_coarse) {
    require(run.complete(), "aggregate_cost: run is incomplete");
    model.validate();
    const int K = *run.converged_at;
    CostBreakdown b;
    b.iterations = K;

    for (int k = 0; k <= K; ++k) {
        const auto& rec = run.iterations[static_cast<std::size_t>(k)];
        for (const auto& c : rec.coarse_cost) b.coarse += scalar_cost(c, model.weights);
        if (k >= 1) {
            double worst = 0.0, sum = 0.0;
            for (int N = 0; N < run.partition.intervals(); ++N) {
                double c;
                if (model.mode == CostModel::Mode::Synthetic) {
                    c = run.partition.length(N) * std::pow(rec.zeta, -1.0 / model.alpha);
                } else {
                    c = scalar_cost(rec.fine_cost[static_cast<std::size_t>(N)], model.weights);
                }
                worst = std::max(worst, c);
                sum += c;
            }
            b.fine_critical += worst;
            b.fine_work += sum;
        }
    }
    const double delays = model.comm_delay * (K + 1);
    b.total = b.fine_critical + (include_coarse ? b.coarse : 0.0) + delays;
    b.work_total = b.fine_work + (include_coarse ? b.coarse : 0.0) + delays;
    return b;
}

inline double aggregate_cost(const PararealRun& run, const CostModel& model, bool include_coarse) {
    return aggregate_cost_breakdown(run, model, include_coarse).total;
}

/// Speedup/efficiency of the adaptive and classical runs against a measured
/// sequential fine solve, with and without the coarse solver's cost.
struct SpeedupReport {
    double cost_seq = 0.0;
    double cost_ap_with = 0.0, cost_ap_without = 0.0;
    double cost_cp_with = 0.0, cost_cp_without = 0.0;
    double speedup_ap_with = 0.0, speedup_ap_without = 0.0;
    double speedup_cp_with = 0.0, speedup_cp_without = 0.0;
    double efficiency_ap_with = 0.0, efficiency_ap_without = 0.0;
    double efficiency_cp_with = 0.0, efficiency_cp_without = 0.0;
    int n_intervals = 0;
    double eta = 0.0;
    double T = 0.0;
};

inline SpeedupReport speedup_report(const PararealRun& run_ap, const PararealRun& run_cp,
                                    double cost_seq_measured, const CostModel& model) {
    require(run_ap.eta == run_cp.eta, "speedup_report: runs target different eta");
    require(run_ap.partition.intervals() == run_cp.partition.intervals(),
            "speedup_report: runs use different processor counts");
    require(cost_seq_measured > 0.0, "speedup_report: cost_seq must be positive");
    SpeedupReport r;
    r.cost_seq = cost_seq_measured;
    r.n_intervals = run_ap.partition.intervals();
    r.eta = run_ap.eta;
    r.T = run_ap.T;
    r.cost_ap_with = aggregate_cost(run_ap, model, true);
    r.cost_ap_without = aggregate_cost(run_ap, model, false);
    r.cost_cp_with = aggregate_cost(run_cp, model, true);
    r.cost_cp_without = aggregate_cost(run_cp, model, false);
    r.speedup_ap_with = cost_seq_measured / r.cost_ap_with;
    r.speedup_ap_without = cost_seq_measured / r.cost_ap_without;
    r.speedup_cp_with = cost_seq_measured / r.cost_cp_with;
    r.speedup_cp_without = cost_seq_measured / r.cost_cp_without;
    r.efficiency_ap_with = r.speedup_ap_with / r.n_intervals;
    r.efficiency_ap_without = r.speedup_ap_without / r.n_intervals;
    r.efficiency_cp_with = r.speedup_cp_with / r.n_intervals;
    r.efficiency_cp_without = r.speedup_cp_without / r.n_intervals;
    return r;
}

namespace detail {
inline double factorial_bound(double mu, double rate, int k) {
    if (rate <= 0.0) return 0.0;
    return std::exp(std::log(mu) + (k + 1) * std::log(rate) - std::lgamma(k + 2.0));
}
}  // namespace detail

/// Convergence bound mu * tau^{k+1} / (k+1)! of the ideal algorithm.
inline double ideal_bound(const HypothesisConstants& consts, int k) {
    require(k >= 0, "ideal_bound: k must be nonnegative");
    return detail::factorial_bound(consts.mu, consts.tau, k);
}

/// Perturbed bound mu * tau_tilde^{k+1} / (k+1)! of the feasible algorithm.
inline double perturbed_bound(const HypothesisConstants& consts, int k) {
    require(k >= 0, "perturbed_bound: k must be nonnegative");
    return detail::factorial_bound(consts.mu, consts.tau_tilde, k);
}

/// Asymptotic parallel efficiency when the coarse cost is negligible:
/// 1 / (1 + eps_g^{1/alpha}).
inline double ideal_efficiency(double eps_g, double alpha) {
    require(eps_g > 0.0 && eps_g < 1.0, "ideal_efficiency: eps_g must lie in (0, 1)");
    require(alpha > 0.0, "ideal_efficiency: alpha must be positive");
    return 1.0 / (1.0 + std::pow(eps_g, 1.0 / alpha));
}

inline double ideal_speedup(double eps_g, double alpha, int n_intervals) {
    return n_intervals * ideal_efficiency(eps_g, alpha);
}

struct SyntheticEfficiency {
    double computed_efficiency = 0.0;
    double model_efficiency = 0.0;
    double ratio = 0.0;          // computed / model
    double cost_ap = 0.0;
    double cost_cp = 0.0;
    double cost_seq = 0.0;
    double cp_ap_ratio = 0.0;    // cost_CP / cost_AP
    double cp_ap_model = 0.0;    // K / (1 + eps_g^{1/alpha})
};

/// Evaluates the synthetic cost model f_k = dT * zeta_k^{-1/alpha} under the
/// theoretical schedule and compares the resulting efficiency with the
/// asymptotic prediction.
inline SyntheticEfficiency synthetic_efficiency_check(double eps_g, double alpha, int K,
                                                      int n_intervals) {
    require(K >= 1, "synthetic_efficiency_check: K must be >= 1");
    require(n_intervals >= 1, "synthetic_efficiency_check: n_intervals must be >= 1");
    ToleranceSchedule sched;
    sched.mode = ScheduleMode::Theoretical;
    sched.eps_g = eps_g;
    sched.eta = eps_g;  // unused by the theoretical formula
    const double dT = 1.0;
    SyntheticEfficiency r;
    double last = 0.0;
    for (int k = 0; k < K; ++k) {
        last = dT * std::pow(schedule_zeta(sched, k), -1.0 / alpha);
        r.cost_ap += last;
    }
    r.cost_cp = K * last;
    r.cost_seq = n_intervals * last;
    r.computed_efficiency = (r.cost_seq / r.cost_ap) / n_intervals;
    r.model_efficiency = ideal_efficiency(eps_g, alpha);
    r.ratio = r.computed_efficiency / r.model_efficiency;
    r.cp_ap_ratio = r.cost_cp / r.cost_ap;
    r.cp_ap_model = K / (1.0 + std::pow(eps_g, 1.0 / alpha));
    return r;
}

}  // namespace apara
