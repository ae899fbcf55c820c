#pragma once

#include <cstdint>

namespace apara {

/// Work counters accumulated by one propagation. Additive under merge;
/// counters never decrease while a propagation is running.
struct CostCounters {
    std::int64_t accepted_steps = 0;
    std::int64_t rejected_steps = 0;
    std::int64_t rhs_evals = 0;
    std::int64_t jac_evals = 0;
    std::int64_t lin_solves = 0;

    CostCounters& operator+=(const CostCounters& o) {
        accepted_steps += o.accepted_steps;
        rejected_steps += o.rejected_steps;
        rhs_evals += o.rhs_evals;
        jac_evals += o.jac_evals;
        lin_solves += o.lin_solves;
        return *this;
    }
    friend CostCounters operator+(CostCounters a, const CostCounters& b) { return a += b; }

    std::int64_t total_steps() const { return accepted_steps + rejected_steps; }
};

}  // namespace apara
