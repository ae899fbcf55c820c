#include "apara/analysis.hpp"
#include "apara/parareal.hpp"
#include "apara/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace apara;

struct BrusselatorRig {
    OdeSystem sys = make_brusselator();
    double T;
    int n;
    TimePartition grid;
    std::vector<Vec> ref;
    AccuracyChart chart_coarse, chart_fine;

    BrusselatorRig(double T_, int n_, bool balanced)
        : T(T_),
          n(n_),
          grid(balanced
                   ? balance_partition(make_brusselator(), T_, n_, solver_at(Method::ExplicitRk54, 1e-4))
                   : TimePartition::uniform(T_, n_)) {
        finish();
    }

    BrusselatorRig(double T_, int n_) : T(T_), n(n_), grid(TimePartition::uniform(T_, n_)) {
        finish();
    }

    void finish() {
        ref = reference_solve(sys, T, grid);
        chart_coarse = build_chart(sys, Method::ExplicitRk54, T,
                                   {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}, grid, ref);
        chart_fine = build_chart(
            sys, Method::RadauIia5, T,
            {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12}, grid, ref);
    }

    RunOptions options(double eta, double eps_g = 0.1) const {
        RunOptions opt;
        opt.T = T;
        opt.n_intervals = n;
        opt.eta = eta;
        opt.eps_g = eps_g;
        opt.chart_coarse = &chart_coarse;
        opt.chart_fine = &chart_fine;
        opt.partition = &grid;
        opt.reference = &ref;
        opt.workers = 2;
        return opt;
    }
};

TEST(CoarseSweep, ConstantDynamicsKeepsInitialState) {
    OdeSystem sys;
    sys.name = "zero";
    sys.dim = 2;
    sys.u0 = make_vec({1.5, -0.5});
    sys.rhs = [](double, const Vec&, Vec& out) { out.setZero(); };
    auto part = TimePartition::uniform(3.0, 6);
    auto sweep = coarse_sweep(sys, part, solver_at(Method::ExplicitRk54, 1e-4), nullptr, nullptr);
    for (const auto& y : sweep.row) {
        EXPECT_EQ(y[0], sys.u0[0]);
        EXPECT_EQ(y[1], sys.u0[1]);
    }
}

TEST(CoarseSweep, CorrectionCollapsesWhenCoarseEqualsFine) {
    // If the corrections F are computed by the same coarse solver on the
    // same row, the update telescopes: y_{k+1}^{N+1} = F^N exactly.
    auto sys = make_brusselator();
    auto part = TimePartition::uniform(4.0, 4);
    auto cfg = solver_at(Method::ExplicitRk54, 1e-5);
    CoarsePlan plan;
    auto sweep0 = coarse_sweep(sys, part, cfg, nullptr, nullptr, &plan);
    // corrections from the identical solver on the same row
    std::vector<Vec> corr(4);
    for (int N = 0; N < 4; ++N) {
        SolverConfig c2 = cfg;
        if (plan.h_init[static_cast<std::size_t>(N)] > 0.0)
            c2.h_init = plan.h_init[static_cast<std::size_t>(N)];
        corr[static_cast<std::size_t>(N)] =
            propagate(sys, part.boundaries[static_cast<std::size_t>(N)], part.length(N),
                      sweep0.row[static_cast<std::size_t>(N)], c2)
                .y_end;
    }
    auto sweep1 = coarse_sweep(sys, part, cfg, &sweep0.row, &corr, &plan);
    for (int N = 0; N < 4; ++N) {
        EXPECT_EQ(sweep1.row[static_cast<std::size_t>(N) + 1][0],
                  corr[static_cast<std::size_t>(N)][0]);
        EXPECT_EQ(sweep1.row[static_cast<std::size_t>(N) + 1][1],
                  corr[static_cast<std::size_t>(N)][1]);
    }
}

TEST(CoarseSweep, IterationZeroTracksReferenceQualitatively) {
    BrusselatorRig rig(20.0, 20);
    SolverConfig coarse = solver_at(Method::ExplicitRk54, tol_for_accuracy(rig.chart_coarse, 0.1));
    auto sweep = coarse_sweep(rig.sys, rig.grid, coarse, nullptr, nullptr);
    double worst = 0.0;
    for (int N = 1; N <= 20; ++N) {
        worst = std::max(worst, state_norm(rig.sys, sweep.row[static_cast<std::size_t>(N)] -
                                                        rig.ref[static_cast<std::size_t>(N)]));
    }
    EXPECT_GT(worst, 0.0);
    EXPECT_LT(worst, 1.0);  // bounded by the calibrated coarse accuracy scale
}

TEST(FineStage, ConstantScheduleReproducesDirectPropagation) {
    BrusselatorRig rig(8.0, 4);
    const double eta = 1e-6;
    std::vector<double> zrow(4, eta / 2.0);
    auto stage = fine_stage(rig.sys, rig.grid, rig.ref, zrow, &rig.chart_fine,
                            solver_at(Method::RadauIia5, 1e-8), nullptr, nullptr, 0, 1);
    ASSERT_FALSE(stage.failed);
    const double tol = tol_for_accuracy(rig.chart_fine, eta / 2.0);
    EXPECT_DOUBLE_EQ(stage.tol, tol);
    for (int N = 0; N < 4; ++N) {
        auto direct = propagate(rig.sys, rig.grid.boundaries[static_cast<std::size_t>(N)],
                                rig.grid.length(N), rig.ref[static_cast<std::size_t>(N)],
                                solver_at(Method::RadauIia5, tol));
        EXPECT_EQ(stage.corrections[static_cast<std::size_t>(N)][0], direct.y_end[0]);
        EXPECT_EQ(stage.corrections[static_cast<std::size_t>(N)][1], direct.y_end[1]);
    }
}

TEST(FineStage, LoadBalancedCostsAreEven) {
    auto sys = make_brusselator();
    const double T = 100.0;
    auto part = balance_partition(sys, T, 10, solver_at(Method::ExplicitRk54, 1e-4));
    ASSERT_EQ(part.intervals(), 10);
    auto ref = reference_solve(sys, T, part);
    std::vector<double> zrow(10, 1e-9);
    auto chart_grid = part;
    auto chart = build_chart(sys, Method::RadauIia5, T,
                             {1e-4, 1e-6, 1e-8, 1e-10, 1e-12}, part, ref);
    auto stage = fine_stage(sys, part, ref, zrow, &chart, solver_at(Method::RadauIia5, 1e-8),
                            nullptr, nullptr, 0, 2);
    ASSERT_FALSE(stage.failed);
    const auto weights = CostWeights::for_dim(2);
    double lo = 1e300, hi = 0.0;
    for (const auto& c : stage.cost) {
        const double v = scalar_cost(c, weights);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_LE(hi / lo, 1.5);
}

TEST(BalancePartition, SingleIntervalAndFlatDensity) {
    auto lin = make_linear_decay(-1.0, 1.0);
    auto single = balance_partition(lin, 5.0, 1, solver_at(Method::ExplicitRk54, 1e-6));
    ASSERT_EQ(single.boundaries.size(), 2u);
    EXPECT_EQ(single.boundaries[0], 0.0);
    EXPECT_EQ(single.boundaries[1], 5.0);

    // rtol-dominated control on pure decay gives near-constant steps; start
    // at the equilibrium step so the initial ramp does not skew the density
    SolverConfig cfg = solver_at(Method::ExplicitRk54, 1e-8);
    cfg.atol = 1e-14;
    cfg.rtol = 1e-6;
    cfg.h_init = 0.1;
    cfg.h_max = 0.2;
    auto part = balance_partition(lin, 5.0, 5, cfg);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(part.length(i), 1.0, 0.1);  // within 10% of uniform spacing
    }
}

TEST(BalancePartition, ReducesFineImbalanceOnBrusselator) {
    auto sys = make_brusselator();
    const double T = 100.0;
    const int n = 10;
    auto probe = solver_at(Method::ExplicitRk54, 1e-4);
    auto balanced = balance_partition(sys, T, n, probe);
    auto uniform = TimePartition::uniform(T, n);

    bool nonuniform = false;
    for (int i = 0; i < n; ++i)
        if (std::abs(balanced.length(i) - T / n) > 1e-6) nonuniform = true;
    EXPECT_TRUE(nonuniform);

    const auto weights = CostWeights::for_dim(2);
    auto imbalance = [&](const TimePartition& part) {
        auto ref = reference_solve(sys, T, part);
        double lo = 1e300, hi = 0.0;
        for (int N = 0; N < n; ++N) {
            auto res = propagate(sys, part.boundaries[static_cast<std::size_t>(N)], part.length(N),
                                 ref[static_cast<std::size_t>(N)],
                                 solver_at(Method::RadauIia5, 1e-10));
            const double v = scalar_cost(res.cost, weights);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi / lo;
    };
    EXPECT_LT(imbalance(balanced), imbalance(uniform));
}

TEST(RunAdaptive, FixedModeMatchesRunClassicalExactly) {
    BrusselatorRig rig(10.0, 5);
    RunOptions opt = rig.options(1e-6);
    opt.mode = ScheduleMode::Fixed;
    auto a = run_adaptive(rig.sys, opt);
    auto b = run_classical(rig.sys, rig.options(1e-6));
    ASSERT_TRUE(a.complete());
    ASSERT_TRUE(b.complete());
    ASSERT_EQ(a.rows(), b.rows());
    for (int k = 0; k < a.rows(); ++k) {
        for (int N = 0; N <= 5; ++N) {
            const auto& ya = a.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(N)];
            const auto& yb = b.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(N)];
            EXPECT_EQ(ya[0], yb[0]);
            EXPECT_EQ(ya[1], yb[1]);
        }
    }
}

TEST(RunAdaptive, TrivialTargetConvergesImmediately) {
    BrusselatorRig rig(10.0, 5);
    RunOptions opt = rig.options(1.0);  // eta looser than the coarse accuracy
    auto run = run_adaptive(rig.sys, opt);
    ASSERT_TRUE(run.complete());
    EXPECT_EQ(*run.converged_at, 0);
    EXPECT_EQ(run.rows(), 1);
}

TEST(RunAdaptive, ExactFineModeTerminatesFinitely) {
    BrusselatorRig rig(8.0, 4);
    RunOptions opt = rig.options(1e-10);
    opt.exact_fine = true;
    opt.chart_fine = nullptr;
    opt.min_iterations = 4;
    opt.K_max = 4;
    auto run = run_adaptive(rig.sys, opt);
    ASSERT_FALSE(run.failed);
    double ref_scale = 0.0;
    for (const auto& u : rig.ref) ref_scale = std::max(ref_scale, state_norm(rig.sys, u));
    for (int k = 0; k < run.rows(); ++k) {
        // y^0_k = u0 for every row
        EXPECT_EQ(run.states[static_cast<std::size_t>(k)][0][0], rig.sys.u0[0]);
        EXPECT_EQ(run.states[static_cast<std::size_t>(k)][0][1], rig.sys.u0[1]);
        for (int N = 1; N <= std::min(k, 4); ++N) {
            const double err =
                state_norm(rig.sys, run.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(N)] -
                                        rig.ref[static_cast<std::size_t>(N)]);
            EXPECT_LE(err, 1e-10 * (1.0 + ref_scale)) << "k=" << k << " N=" << N;
        }
    }
}

TEST(RunAdaptive, DivergenceFlaggedWithHistoryPreserved) {
    BrusselatorRig rig(10.0, 5);
    RunOptions opt = rig.options(1e-10);
    opt.K_max = 1;  // far too few iterations for this target
    auto run = run_adaptive(rig.sys, opt);
    EXPECT_FALSE(run.complete());
    EXPECT_TRUE(run.diverged);
    EXPECT_FALSE(run.failed);
    EXPECT_EQ(run.rows(), 2);  // row 0 plus the single allowed iteration
}

TEST(RunAdaptive, ConvergedIterationCountsTrackClassical) {
    BrusselatorRig rig(20.0, 20, true);  // balanced decomposition, matched chart grid
    RunOptions opt = rig.options(1e-8);
    auto ap = run_adaptive(rig.sys, opt);
    auto cp = run_classical(rig.sys, rig.options(1e-8));
    ASSERT_TRUE(ap.complete());
    ASSERT_TRUE(cp.complete());
    EXPECT_LE(std::abs(*ap.converged_at - *cp.converged_at), 1);
    // constant schedule dominates the adaptive one in total fine work
    const CostModel model{CostModel::Mode::Measured, 1.0, CostWeights::for_dim(2), 0.0};
    const auto ba = aggregate_cost_breakdown(ap, model, false);
    const auto bc = aggregate_cost_breakdown(cp, model, false);
    EXPECT_LE(ba.fine_work, bc.fine_work);
    // and the adaptive efficiency is at least the classical one
    EXPECT_LE(aggregate_cost(ap, model, true), aggregate_cost(cp, model, true));
    EXPECT_LE(ba.total, bc.total);
}

TEST(EstimateConstants, AlgebraicIdentityAndExactCoarseLimit) {
    auto sys = make_linear_decay(-1.0, 1.0);
    const double T = 2.0;
    auto grid = TimePartition::uniform(T, 8);
    auto ref = reference_solve(sys, T, grid);

    // exact coarse propagator: deltaG == 0, so tau ~ 0
    const SolverConfig ref_cfg = reference_config();
    auto exact = [&](double t, double s, const Vec& w) {
        return propagate(sys, t, s, w, ref_cfg).y_end;
    };
    auto h = estimate_constants(sys, T, grid, exact, 0.1, ref, 16, 7);
    EXPECT_LE(h.C_d * h.eps_g, 1e-6);
    EXPECT_LE(h.tau, 1e-5);
    EXPECT_NEAR(h.tau, h.eps_g / h.eps_bar, 1e-12 * std::max(1.0, h.tau));

    EXPECT_THROW(estimate_constants(sys, T, grid, exact, 0.1, ref, 9, 7),
                 std::invalid_argument);
}

TEST(EstimateConstants, EulerCoarseRecoversLipschitzConstant) {
    const double lambda = 0.8;
    auto sys = make_linear_decay(lambda, 1.0);
    const double T = 1.0;
    auto grid = TimePartition::uniform(T, 8);  // s = 0.125, s*lambda = 0.1
    auto ref = reference_solve(sys, T, grid);
    auto euler = [&](double t, double s, const Vec& w) {
        Vec f(1);
        sys.rhs(t, w, f);
        return Vec(w + s * f);  // one explicit Euler step of size s
    };
    auto h = estimate_constants(sys, T, grid, euler, 0.1, ref, 24, 11);
    EXPECT_NEAR(h.C_c, std::abs(lambda), 0.25 * std::abs(lambda));
    EXPECT_NEAR(h.tau, h.eps_g / h.eps_bar, 1e-12 * h.tau);
    // mu, tau_tilde derived consistently
    EXPECT_DOUBLE_EQ(h.tau_tilde, h.tau + h.eps_g);
    auto inflated = h.inflated(2.0);
    EXPECT_DOUBLE_EQ(inflated.C_c, 2.0 * h.C_c);
    EXPECT_NEAR(inflated.tau, inflated.eps_g / inflated.eps_bar, 1e-12 * inflated.tau);
}

TEST(ObservedErrors, StayBelowPerturbedBound) {
    // u' = -u, T=2, 8 intervals, coarse at eps_g = 0.1; constants inflated x2
    auto sys = make_linear_decay(-1.0, 1.0);
    const double T = 2.0;
    const int n = 8;
    auto grid = TimePartition::uniform(T, n);
    auto ref = reference_solve(sys, T, grid);
    auto chart_coarse = build_chart(sys, Method::ExplicitRk54, T,
                                    {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}, grid, ref);
    auto chart_fine = build_chart(sys, Method::RadauIia5, T,
                                  {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12},
                                  grid, ref);
    const double eps_g = 0.1;
    auto consts = estimate_constants(sys, T, grid, solver_at(Method::ExplicitRk54, 1e-4),
                                     chart_coarse, eps_g, ref, 24, 3)
                      .inflated(2.0);

    RunOptions opt;
    opt.T = T;
    opt.n_intervals = n;
    opt.eta = 1e-10;
    opt.eps_g = eps_g;
    opt.mode = ScheduleMode::Theoretical;
    opt.chart_coarse = &chart_coarse;
    opt.chart_fine = &chart_fine;
    opt.partition = &grid;
    opt.reference = &ref;
    auto run = run_adaptive(sys, opt);
    ASSERT_TRUE(run.complete());
    for (int k = 0; k <= *run.converged_at; ++k) {
        const double observed = run.iterations[static_cast<std::size_t>(k)].max_error;
        EXPECT_LE(observed, perturbed_bound(consts, k)) << "k=" << k;
    }
}

TEST(RunAdaptive, DeterministicAcrossWorkerCounts) {
    BrusselatorRig rig(10.0, 5);
    RunOptions serial = rig.options(1e-7);
    serial.workers = 1;
    RunOptions parallel = rig.options(1e-7);
    parallel.workers = 4;
    auto a = run_adaptive(rig.sys, serial);
    auto b = run_adaptive(rig.sys, parallel);
    ASSERT_EQ(a.rows(), b.rows());
    for (int k = 0; k < a.rows(); ++k)
        for (int N = 0; N <= 5; ++N)
            EXPECT_EQ(a.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(N)],
                      b.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(N)]);
}

TEST(Pilot, PracticalModePlansWithinBounds) {
    BrusselatorRig rig(20.0, 10);
    RunOptions opt = rig.options(1e-8);
    auto run = run_adaptive(rig.sys, opt);
    ASSERT_TRUE(run.complete());
    EXPECT_GE(run.K_planned, 2);
    EXPECT_LE(run.K_planned, 10);
    EXPECT_GT(run.pilot_cost.rhs_evals, 0);
    // explicit override wins
    opt.K = 3;
    auto forced = run_adaptive(rig.sys, opt);
    EXPECT_EQ(forced.K_planned, 3);
    EXPECT_EQ(forced.schedule.K, 3);
}

}  // namespace
