#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace apara {

/// Constants of the embedded-pair step controller.
struct StepControl {
    double safety = 0.9;
    double shrink_min = 0.2;
    double grow_max = 5.0;
};

struct StepDecision {
    bool accept = false;
    double h_next = 0.0;
};

/// Standard embedded-pair controller: accept iff err_norm <= 1 and propose
/// h_next = h * clamp(safety * err_norm^(-1/(order+1)), shrink_min, grow_max),
/// clamped to [h_min, h_max]. `order` is the order of the error estimator.
inline StepDecision step_controller(double err_norm, int order, double h,
                                    double h_min = 0.0,
                                    double h_max = std::numeric_limits<double>::infinity(),
                                    const StepControl& ctl = {}) {
    double factor;
    if (err_norm <= 0.0) {
        factor = ctl.grow_max;
    } else {
        factor = ctl.safety * std::pow(err_norm, -1.0 / (order + 1));
        factor = std::clamp(factor, ctl.shrink_min, ctl.grow_max);
    }
    StepDecision d;
    d.accept = err_norm <= 1.0;
    d.h_next = std::clamp(h * factor, h_min, h_max);
    return d;
}

}  // namespace apara
