#pragma once

#include "apara/types.hpp"

#include <limits>
#include <optional>
#include <string>

namespace apara {

enum class Method { ExplicitRk54, RadauIia5 };

/// Starting-guess strategy for the implicit solver's inner Newton iterations.
/// PreviousTime starts from the converged value at the previous time node;
/// the other two re-use end-of-Newton iterates stored during the previous
/// parareal iteration.
enum class WarmStart { PreviousTime, PreviousIteration, DynamicsCorrected };

struct SolverConfig {
    Method method = Method::ExplicitRk54;
    double atol = 1e-6;
    double rtol = 1e-6;
    std::optional<double> h_init;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    int newton_max_iters = 6;
    double newton_tol = 0.03;
    WarmStart warm_start = WarmStart::PreviousTime;

    SolverConfig& with_tol(double tol) {
        atol = rtol = tol;
        return *this;
    }
    void validate() const {
        require(atol > 0.0 && rtol > 0.0, "solver: tolerances must be strictly positive");
        require(h_min <= h_max && h_min > 0.0, "solver: need 0 < h_min <= h_max");
        require(newton_max_iters > 0, "solver: newton_max_iters must be positive");
        require(newton_tol > 0.0, "solver: newton_tol must be positive");
        if (h_init) require(*h_init > 0.0, "solver: h_init must be positive");
    }
};

inline SolverConfig solver_at(Method m, double tol) {
    SolverConfig cfg;
    cfg.method = m;
    cfg.atol = cfg.rtol = tol;
    return cfg;
}

inline std::string method_name(Method m) {
    return m == Method::ExplicitRk54 ? "explicit_rk54" : "radau_iia5";
}

inline Method method_from_name(const std::string& s) {
    if (s == "explicit_rk54") return Method::ExplicitRk54;
    if (s == "radau_iia5") return Method::RadauIia5;
    throw std::invalid_argument("unknown method: " + s);
}

}  // namespace apara
