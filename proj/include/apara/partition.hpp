#pragma once

#include "apara/types.hpp"

#include <vector>

namespace apara {

/// Boundaries T_0 = 0 < T_1 < ... < T_N = T of the parareal decomposition.
struct TimePartition {
    std::vector<double> boundaries;

    int intervals() const { return static_cast<int>(boundaries.size()) - 1; }
    double total() const { return boundaries.back(); }
    double length(int N) const { return boundaries[N + 1] - boundaries[N]; }
    double max_length() const {
        double m = 0.0;
        for (int i = 0; i < intervals(); ++i) m = std::max(m, length(i));
        return m;
    }

    void validate() const {
        require(!boundaries.empty(), "partition: empty");
        require(boundaries.front() == 0.0, "partition: first boundary must be 0");
        for (std::size_t i = 1; i < boundaries.size(); ++i)
            require(boundaries[i] > boundaries[i - 1], "partition: boundaries must increase");
    }

    static TimePartition uniform(double T, int n) {
        require(T > 0.0 && n >= 1, "partition: need T > 0 and n >= 1");
        TimePartition p;
        p.boundaries.resize(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) p.boundaries[static_cast<std::size_t>(i)] = T * i / n;
        p.boundaries.back() = T;
        return p;
    }
};

}  // namespace apara
