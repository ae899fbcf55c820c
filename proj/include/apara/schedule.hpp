#pragma once

#include "apara/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace apara {

enum class ScheduleMode { Theoretical, Practical, Fixed };

inline std::string schedule_mode_name(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::Theoretical: return "theoretical";
        case ScheduleMode::Practical: return "practical";
        default: return "fixed";
    }
}

inline ScheduleMode schedule_mode_from_name(const std::string& s) {
    if (s == "theoretical") return ScheduleMode::Theoretical;
    if (s == "practical") return ScheduleMode::Practical;
    if (s == "fixed") return ScheduleMode::Fixed;
    throw std::invalid_argument("unknown schedule mode: " + s);
}

/// Per-iteration fine accuracies zeta_k.
///   theoretical: zeta_k = eps_g^{k+2} / ((k+1)! nu_k)
///   practical:   zeta_k = eps_g^{1-(k+1)/K} (eta/2)^{(k+1)/K} for k < K-1,
///                eta/2 from k = K-1 on (so zeta_{K-1} = eta/2 exactly)
///   fixed:       eta/2 (classical parareal)
struct ToleranceSchedule {
    ScheduleMode mode = ScheduleMode::Fixed;
    double eps_g = 0.1;       // coarse accuracy
    double eta = 1e-8;        // final target accuracy
    int K = 0;                // anticipated iteration count (practical mode)
    std::vector<double> nu;   // nu_k sequence, theoretical mode; empty -> all 1

    void validate() const {
        require(eps_g > 0.0 && eta > 0.0, "schedule: eps_g and eta must be positive");
        if (mode == ScheduleMode::Practical) require(K >= 1, "schedule: practical mode needs K >= 1");
        for (double v : nu) require(v > 0.0, "schedule: nu entries must be positive");
    }
};

inline double schedule_zeta(const ToleranceSchedule& s, int k) {
    require(k >= 0, "schedule_zeta: k must be nonnegative");
    switch (s.mode) {
        case ScheduleMode::Theoretical: {
            double fact = 1.0;  // (k+1)!
            for (int j = 2; j <= k + 1; ++j) fact *= j;
            const double nu_k =
                static_cast<std::size_t>(k) < s.nu.size() ? s.nu[static_cast<std::size_t>(k)] : 1.0;
            return std::pow(s.eps_g, k + 2) / (fact * nu_k);
        }
        case ScheduleMode::Practical: {
            if (k >= s.K - 1) return s.eta / 2.0;
            const double r = static_cast<double>(k + 1) / s.K;
            return std::pow(s.eps_g, 1.0 - r) * std::pow(s.eta / 2.0, r);
        }
        default:
            return s.eta / 2.0;
    }
}

}  // namespace apara
