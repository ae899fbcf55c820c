#pragma once

#include "apara/solver_config.hpp"
#include "apara/types.hpp"

#include <vector>

namespace apara {

/// End-of-Newton iterates stored during one parareal iteration, keyed by
/// (interval index N, fine-time-node index n). Holds at most one parareal
/// iteration of data; intervals are written by distinct workers and never
/// share an entry.
struct WarmStartHistory {
    struct Node {
        double t = 0.0;
        Vec y;
    };
    std::vector<std::vector<Node>> intervals;

    void reset(int n_intervals) {
        intervals.assign(static_cast<std::size_t>(n_intervals), {});
    }
    void record(int N, double t, const Vec& y) {
        intervals[static_cast<std::size_t>(N)].push_back({t, y});
    }
    const Node* node(int N, int n) const {
        if (N < 0 || static_cast<std::size_t>(N) >= intervals.size()) return nullptr;
        const auto& nodes = intervals[static_cast<std::size_t>(N)];
        if (n < 0 || static_cast<std::size_t>(n) >= nodes.size()) return nullptr;
        return &nodes[static_cast<std::size_t>(n)];
    }
    bool empty() const {
        for (const auto& v : intervals)
            if (!v.empty()) return false;
        return true;
    }
};

/// Newton starting guess for node n of interval N at parareal iteration k.
/// `fallback` is the converged iterate at the previous time node. Degrades
/// gracefully: missing history entries reduce DynamicsCorrected to
/// PreviousIteration and PreviousIteration to the fallback; k = 0 always
/// uses the fallback.
inline Vec newton_initial_guess(WarmStart strategy, const WarmStartHistory& history, int N, int n,
                                int k, const Vec& fallback) {
    if (k <= 0 || strategy == WarmStart::PreviousTime) return fallback;
    const auto* prev = history.node(N, n);
    if (strategy == WarmStart::PreviousIteration) return prev ? prev->y : fallback;
    // DynamicsCorrected: u_{k-1}^{N,n} + u_k^{N,n-1} - u_{k-1}^{N,n-1}
    const auto* prev_m1 = history.node(N, n - 1);
    if (prev && prev_m1) return prev->y + fallback - prev_m1->y;
    return prev ? prev->y : fallback;
}

}  // namespace apara
