#pragma once

#include "apara/detail/integrate_common.hpp"
#include "apara/step_control.hpp"
#include "apara/warm_start.hpp"

#include <array>

namespace apara::detail {

/// Dormand-Prince 5(4) coefficients. Stage 7 equals the 5th-order solution
/// (first-same-as-last), so an accepted step reuses it as the next stage 1.
struct Dp54 {
    static constexpr int stages = 7;
    static constexpr int est_order = 4;  // embedded solution order
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a{{
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    }};
    // b5 - b4: coefficients of the embedded error estimate
    static constexpr std::array<double, 7> e{71.0 / 57600, 0.0,           -71.0 / 16695,
                                             71.0 / 1920,  -17253.0 / 339200, 22.0 / 525,
                                             -1.0 / 40};
};

struct Rk54Outcome {
    bool ok = false;
    bool underflow = false;
    Vec y;
    double h_first = 0.0;  // first accepted step size
    double h_last = 0.0;   // last accepted step size
};

/// Adaptive Dormand-Prince propagation over [t0, t0+dt]. `record`, when
/// given, receives every accepted (t, y) node (used by the load balancer).
inline Rk54Outcome rk54_propagate(const OdeSystem& sys, double t0, double dt, const Vec& y0,
                                  const SolverConfig& cfg, CostCounters& cost,
                                  WarmStartHistory* record = nullptr, int interval = 0) {
    const int n = sys.dim;
    const double t_end = t0 + dt;
    double t = t0;
    Vec y = y0;

    std::array<Vec, 7> k;
    for (auto& ki : k) ki.resize(n);
    Vec ytmp(n), ynew(n), err(n);

    sys.rhs(t, y, k[0]);
    cost.rhs_evals += 1;

    const double h_cap = std::min(cfg.h_max, dt);
    double h = cfg.h_init ? std::min(*cfg.h_init, h_cap)
                          : select_initial_step(sys, t, y, k[0], Dp54::est_order, cfg.atol,
                                                cfg.rtol, h_cap, cost);

    Rk54Outcome out;
    bool last_rejected = false;
    while (t < t_end) {
        const bool last = t_end - t <= h;
        const double hs = last ? t_end - t : h;
        if (hs < floor_step(t, cfg.h_min) && !last) {
            out.underflow = true;
            out.y = y;
            return out;
        }

        for (int i = 1; i < 7; ++i) {
            ytmp = y;
            for (int j = 0; j < i; ++j) ytmp += hs * Dp54::a[i][j] * k[j];
            sys.rhs(t + Dp54::c[i] * hs, ytmp, k[i]);
        }
        cost.rhs_evals += 6;
        ynew = ytmp;  // stage 7 input state equals the 5th-order solution
        err.setZero();
        for (int i = 0; i < 7; ++i) err += Dp54::e[i] * k[i];
        err *= hs;

        const double err_norm = scaled_max_norm(err, y, cfg.atol, cfg.rtol);
        auto dec = step_controller(err_norm, Dp54::est_order, hs, cfg.h_min, cfg.h_max);
        if (dec.accept) {
            t = last ? t_end : t + hs;
            y = ynew;
            k[0] = k[6];  // FSAL
            cost.accepted_steps += 1;
            if (out.h_first == 0.0) out.h_first = hs;
            out.h_last = hs;
            if (record) record->record(interval, t, y);
            // no growth right after a rejection (anti-thrash at the
            // stability boundary)
            if (last_rejected) dec.h_next = std::min(dec.h_next, hs);
            last_rejected = false;
        } else {
            cost.rejected_steps += 1;
            last_rejected = true;
            if (hs <= floor_step(t, cfg.h_min)) {
                out.underflow = true;  // failing at the minimal admissible step
                out.y = y;
                return out;
            }
        }
        h = dec.h_next;
    }
    out.ok = true;
    out.y = y;
    return out;
}

}  // namespace apara::detail
