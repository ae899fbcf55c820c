#pragma once

#include "apara/cost.hpp"
#include "apara/ode_system.hpp"
#include "apara/solver_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apara::detail {

/// Mixed-norm error measure max_i |e_i| / (atol + rtol |y_i|).
inline double scaled_max_norm(const Vec& e, const Vec& y, double atol, double rtol) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        m = std::max(m, std::abs(e[i]) / (atol + rtol * std::abs(y[i])));
    }
    return m;
}

/// Hairer's cheap starting-step heuristic (one extra rhs evaluation).
/// `est_order` is the order of the embedded error estimator.
inline double select_initial_step(const OdeSystem& sys, double t0, const Vec& y0, const Vec& f0,
                                  int est_order, double atol, double rtol, double h_cap,
                                  CostCounters& cost) {
    auto scaled = [&](const Vec& v) {
        double m = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            m = std::max(m, std::abs(v[i]) / (atol + rtol * std::abs(y0[i])));
        return m;
    };
    const double d0 = scaled(y0), d1 = scaled(f0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, h_cap);
    Vec y1 = y0 + h0 * f0;
    Vec f1(sys.dim);
    sys.rhs(t0 + h0, y1, f1);
    cost.rhs_evals += 1;
    const double d2 = scaled(f1 - f0) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15) {
        h1 = std::max(1e-6, h0 * 1e-3);
    } else {
        h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / (est_order + 1));
    }
    return std::min({100.0 * h0, h1, h_cap});
}

/// Steps smaller than this cannot advance t reliably.
inline double floor_step(double t, double h_min) {
    return std::max(h_min, 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0));
}

}  // namespace apara::detail
