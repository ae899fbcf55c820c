#pragma once

#include "apara/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>

namespace apara {

/// An autonomous-or-not ODE system u' = rhs(t, u) on R^dim together with an
/// optional analytic Jacobian d(rhs)/du. Instances are immutable after
/// construction and safe to share across worker threads; rhs and jacobian
/// must be pure functions of (t, u).
struct OdeSystem {
    std::string name;
    int dim = 0;
    std::function<void(double, const Vec&, Vec&)> rhs;
    std::function<void(double, const Vec&, Mat&)> jacobian;  // empty -> finite differences
    Vec u0;
    std::map<std::string, double> params;
    Norm norm = Norm::Max;

    bool has_jacobian() const { return static_cast<bool>(jacobian); }

    Vec eval_rhs(double t, const Vec& u) const {
        Vec out(dim);
        rhs(t, u, out);
        return out;
    }
};

inline double state_norm(const OdeSystem& sys, const Vec& v) { return norm_of(v, sys.norm); }

/// Forward-difference Jacobian with per-column step sqrt(eps)*max(|u_j|, 1).
inline Mat finite_difference_jacobian(const OdeSystem& system, double t, const Vec& u) {
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Mat jac(system.dim, system.dim);
    Vec f0(system.dim), f1(system.dim), up = u;
    system.rhs(t, u, f0);
    for (int j = 0; j < system.dim; ++j) {
        const double h = sqrt_eps * std::max(std::abs(u[j]), 1.0);
        up[j] = u[j] + h;
        system.rhs(t, up, f1);
        up[j] = u[j];
        jac.col(j) = (f1 - f0) / h;
    }
    return jac;
}

/// Evaluates the analytic Jacobian when present, the finite-difference one
/// otherwise. `counted_rhs` lets the caller account for the extra rhs calls
/// the fallback performs.
inline Mat eval_jacobian(const OdeSystem& system, double t, const Vec& u,
                         std::int64_t* fd_rhs_evals = nullptr) {
    if (system.has_jacobian()) {
        Mat jac(system.dim, system.dim);
        system.jacobian(t, u, jac);
        return jac;
    }
    if (fd_rhs_evals) *fd_rhs_evals += system.dim + 1;
    return finite_difference_jacobian(system, t, u);
}

}  // namespace apara
