#pragma once

#include "apara/detail/integrate_common.hpp"
#include "apara/step_control.hpp"
#include "apara/warm_start.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace apara::detail {

/// 3-stage Radau IIA of order 5; stiffly accurate (c3 = 1, b = last row of A).
struct Radau5 {
    static constexpr int est_order = 3;  // order of the embedded error estimate
    static constexpr std::array<double, 3> c{0.15505102572168219018, 0.64494897427831780982, 1.0};
    static constexpr std::array<std::array<double, 3>, 3> a{{
        {0.19681547722366042587, -0.065535425850198388109, 0.02377097434822015242},
        {0.394424314739087277, 0.29207341166522846302, -0.041548752125997930198},
        {0.37640306270046727505, 0.51248582618842161384, 1.0 / 9.0},
    }};
    // Real eigenvalue of A^{-1}; drives the error-estimate filter.
    static constexpr double gamma = 3.6378342527444957322;
    // Embedded-estimate weights for the stage displacements Z_i.
    static constexpr std::array<double, 3> e{-10.048809399827415562, 1.3821427331607488958,
                                             -1.0 / 3.0};
};

struct RadauOutcome {
    bool ok = false;
    bool underflow = false;
    bool newton_failure = false;
    Vec y;
    double h_first = 0.0;  // first accepted step size
    double h_last = 0.0;   // last accepted step size
};

struct RadauWarmStart {
    const WarmStartHistory* read = nullptr;
    WarmStartHistory* write = nullptr;
    int interval = 0;
    int iteration = 0;
    WarmStart strategy = WarmStart::PreviousTime;
};

/// Adaptive Radau IIA(5) propagation with simplified Newton: one Jacobian per
/// step position, reused across stages and h-rejections at that position.
inline RadauOutcome radau5_propagate(const OdeSystem& sys, double t0, double dt, const Vec& y0,
                                     const SolverConfig& cfg, CostCounters& cost,
                                     const RadauWarmStart* ws = nullptr) {
    const int n = sys.dim;
    const double t_end = t0 + dt;
    double t = t0;
    Vec y = y0;

    const double kappa =
        std::max(10.0 * std::numeric_limits<double>::epsilon() / cfg.rtol,
                 std::min(cfg.newton_tol, std::sqrt(cfg.rtol)));

    Vec f0(n);
    sys.rhs(t, y, f0);
    cost.rhs_evals += 1;

    const double h_cap = std::min(cfg.h_max, dt);
    double h = cfg.h_init ? std::min(*cfg.h_init, h_cap)
                          : select_initial_step(sys, t, y, f0, Radau5::est_order, cfg.atol,
                                                cfg.rtol, h_cap, cost);

    Mat jac(n, n);
    Eigen::PartialPivLU<Mat> lu_full;   // 3n x 3n collocation matrix
    Eigen::PartialPivLU<Mat> lu_err;    // n x n error filter
    Mat m_full(3 * n, 3 * n), m_err(n, n);
    const Mat id = Mat::Identity(n, n);

    Vec z(3 * n), dz(3 * n), rhs(3 * n), f_stage(n), ystage(n);
    Vec err(n), err_rhs(n);

    bool jac_current = false;
    bool first_step = true;
    bool last_rejected = false;
    int node = 0;  // accepted-step index within this propagation

    auto scaled_dz_norm = [&](const Vec& d) {
        double m = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < n; ++j)
                m = std::max(m, std::abs(d[i * n + j]) / (cfg.atol + cfg.rtol * std::abs(y[j])));
        return m;
    };

    RadauOutcome out;
    while (t < t_end) {
        if (!jac_current) {
            jac = eval_jacobian(sys, t, y, &cost.rhs_evals);
            cost.jac_evals += 1;
            jac_current = true;
        }

        int newton_retries = 0;
        bool accepted = false;
        while (!accepted) {
            const bool last = t_end - t <= h;
            const double hs = last ? t_end - t : h;
            if (hs < floor_step(t, cfg.h_min) && !last) {
                out.underflow = true;
                out.y = y;
                return out;
            }

            // Factorizations for this (position, hs)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    m_full.block(i * n, j * n, n, n) =
                        (i == j ? id : Mat::Zero(n, n)) - hs * Radau5::a[i][j] * jac;
            lu_full.compute(m_full);

            // Newton starting guess: converged value at the previous node, or a
            // stored iterate from the previous parareal iteration.
            z.setZero();
            if (ws && ws->strategy != WarmStart::PreviousTime && ws->read && ws->iteration > 0) {
                Vec guess = newton_initial_guess(ws->strategy, *ws->read, ws->interval, node,
                                                 ws->iteration, y);
                for (int i = 0; i < 3; ++i) z.segment(i * n, n) = guess - y;
            }

            bool converged = false;
            double dz_norm_old = -1.0, rate = -1.0;
            for (int it = 0; it < cfg.newton_max_iters; ++it) {
                rhs.setZero();
                bool finite = true;
                std::array<Vec, 3> f{Vec(n), Vec(n), Vec(n)};
                for (int i = 0; i < 3; ++i) {
                    ystage = y + z.segment(i * n, n);
                    sys.rhs(t + Radau5::c[i] * hs, ystage, f[i]);
                    finite = finite && f[i].allFinite();
                }
                cost.rhs_evals += 3;
                if (!finite) break;
                for (int i = 0; i < 3; ++i) {
                    Vec w = Vec::Zero(n);
                    for (int j = 0; j < 3; ++j) w += Radau5::a[i][j] * f[j];
                    rhs.segment(i * n, n) = hs * w - z.segment(i * n, n);
                }
                dz = lu_full.solve(rhs);
                cost.lin_solves += 1;
                const double dz_norm = scaled_dz_norm(dz);
                if (dz_norm_old >= 0.0) rate = dz_norm / std::max(dz_norm_old, 1e-300);
                if (rate >= 0.0 &&
                    (rate >= 1.0 ||
                     std::pow(rate, cfg.newton_max_iters - it) / (1.0 - rate) * dz_norm > kappa)) {
                    break;  // predicted not to converge within the budget
                }
                z += dz;
                if (dz_norm == 0.0 || (rate >= 0.0 && rate / (1.0 - rate) * dz_norm < kappa)) {
                    converged = true;
                    break;
                }
                dz_norm_old = dz_norm;
            }

            if (!converged) {
                cost.rejected_steps += 1;
                ++newton_retries;
                if (newton_retries > 8) {
                    out.newton_failure = true;
                    out.y = y;
                    return out;
                }
                h = hs * 0.5;
                if (h < floor_step(t, cfg.h_min)) {
                    out.underflow = true;
                    out.y = y;
                    return out;
                }
                continue;
            }

            // Embedded error estimate, filtered through (gamma/h I - J).
            m_err = (Radau5::gamma / hs) * id - jac;
            lu_err.compute(m_err);
            err_rhs = f0;
            for (int i = 0; i < 3; ++i) err_rhs += (Radau5::e[i] / hs) * z.segment(i * n, n);
            err = lu_err.solve(err_rhs);
            cost.lin_solves += 1;
            double err_norm = scaled_max_norm(err, y, cfg.atol, cfg.rtol);
            if (err_norm > 1.0 && (first_step || last_rejected)) {
                sys.rhs(t, y + err, f_stage);
                cost.rhs_evals += 1;
                err = lu_err.solve(f_stage + err_rhs - f0);
                cost.lin_solves += 1;
                err_norm = scaled_max_norm(err, y, cfg.atol, cfg.rtol);
            }

            auto dec = step_controller(err_norm, Radau5::est_order, hs, cfg.h_min, cfg.h_max);
            if (dec.accept) {
                t = last ? t_end : t + hs;
                if (out.h_first == 0.0) out.h_first = hs;
                out.h_last = hs;
                y += z.segment(2 * n, n);  // stage 3 is the endpoint (c3 = 1)
                sys.rhs(t, y, f0);
                cost.rhs_evals += 1;
                cost.accepted_steps += 1;
                jac_current = false;
                first_step = false;
                // no growth right after a rejection
                if (last_rejected) dec.h_next = std::min(dec.h_next, hs);
                last_rejected = false;
                if (ws && ws->write) ws->write->record(ws->interval, t, y);
                ++node;
                accepted = true;
            } else {
                cost.rejected_steps += 1;
                last_rejected = true;
                if (hs <= floor_step(t, cfg.h_min)) {
                    out.underflow = true;
                    out.y = y;
                    return out;
                }
            }
            h = dec.h_next;
        }
    }
    out.ok = true;
    out.y = y;
    return out;
}

}  // namespace apara::detail
