#pragma once

#include "apara/detail/radau5.hpp"
#include "apara/detail/rk54.hpp"
#include "apara/partition.hpp"
#include "apara/warm_start.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace apara {

enum class PropagationStatus { Converged, StepSizeUnderflow, NewtonFailure };

inline const char* to_string(PropagationStatus s) {
    switch (s) {
        case PropagationStatus::Converged: return "converged";
        case PropagationStatus::StepSizeUnderflow: return "step_size_underflow";
        default: return "newton_failure";
    }
}

struct PropagationResult {
    Vec y_end;
    CostCounters cost;
    double t0 = 0.0;
    double dt = 0.0;
    double h_first = 0.0;  // first accepted step size
    double h_last = 0.0;   // last accepted step size
    PropagationStatus status = PropagationStatus::Converged;

    bool ok() const { return status == PropagationStatus::Converged; }
};

/// Cross-iteration Newton warm-start wiring for one fine propagation.
struct WarmStartContext {
    const WarmStartHistory* read = nullptr;  // previous parareal iteration
    WarmStartHistory* write = nullptr;       // current parareal iteration
    int interval = 0;
    int iteration = 0;
};

/// Advances y0 from t0 to t0+dt under local error control with the selected
/// method; counters reflect every evaluation performed.
inline PropagationResult propagate(const OdeSystem& system, double t0, double dt, const Vec& y0,
                                   const SolverConfig& cfg, const WarmStartContext* ws = nullptr) {
    require(dt > 0.0, "propagate: dt must be positive");
    require(y0.allFinite(), "propagate: y0 must be finite");
    cfg.validate();

    PropagationResult res;
    res.t0 = t0;
    res.dt = dt;
    if (cfg.method == Method::ExplicitRk54) {
        auto out = detail::rk54_propagate(system, t0, dt, y0, cfg, res.cost,
                                          ws ? ws->write : nullptr, ws ? ws->interval : 0);
        res.y_end = std::move(out.y);
        res.h_first = out.h_first;
        res.h_last = out.h_last;
        res.status = out.ok ? PropagationStatus::Converged : PropagationStatus::StepSizeUnderflow;
    } else {
        detail::RadauWarmStart rws;
        const detail::RadauWarmStart* rwsp = nullptr;
        if (ws) {
            rws.read = ws->read;
            rws.write = ws->write;
            rws.interval = ws->interval;
            rws.iteration = ws->iteration;
            rws.strategy = cfg.warm_start;
            rwsp = &rws;
        }
        auto out = detail::radau5_propagate(system, t0, dt, y0, cfg, res.cost, rwsp);
        res.y_end = std::move(out.y);
        res.h_first = out.h_first;
        res.h_last = out.h_last;
        res.status = out.ok              ? PropagationStatus::Converged
                     : out.newton_failure ? PropagationStatus::NewtonFailure
                                          : PropagationStatus::StepSizeUnderflow;
    }
    return res;
}

inline constexpr double kReferenceTol = 1e-13;

inline SolverConfig reference_config() {
    SolverConfig cfg;
    cfg.method = Method::RadauIia5;
    cfg.atol = cfg.rtol = kReferenceTol;
    return cfg;
}

/// Sequential Radau IIA(5) solve at tolerance 1e-13 recording the state at
/// every partition boundary; the surrogate for the exact solution u(T_N).
inline std::vector<Vec> reference_solve(const OdeSystem& system, double T,
                                        const TimePartition& grid,
                                        CostCounters* cost = nullptr) {
    grid.validate();
    require(grid.total() == T, "reference_solve: grid must end at T");
    std::vector<Vec> states;
    states.reserve(grid.boundaries.size());
    states.push_back(system.u0);
    const SolverConfig cfg = reference_config();
    Vec y = system.u0;
    for (int N = 0; N < grid.intervals(); ++N) {
        auto res = propagate(system, grid.boundaries[N], grid.length(N), y, cfg);
        if (cost) *cost += res.cost;
        if (!res.ok()) {
            std::ostringstream msg;
            msg << "reference_solve: " << to_string(res.status) << " on interval " << N << " ["
                << grid.boundaries[N] << ", " << grid.boundaries[N + 1] << "] of " << system.name;
            throw std::runtime_error(msg.str());
        }
        y = res.y_end;
        states.push_back(y);
    }
    return states;
}

}  // namespace apara
