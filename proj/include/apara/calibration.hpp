#pragma once

#include "apara/executor.hpp"
#include "apara/integrate.hpp"

#include <boost/math/special_functions/fpclassify.hpp>  // isnan used unqualified in pchip
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace apara {

namespace detail {

using LogLogInterp = boost::math::interpolators::pchip<std::vector<double>>;

/// Pool-adjacent-violators projection onto nondecreasing sequences (in log
/// space, since accuracies live on a log scale). Singleton blocks keep their
/// original value bit-for-bit.
inline std::vector<double> isotonic_nondecreasing(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> level(n), weight(n);
    std::vector<std::size_t> size(n), start(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        level[blocks] = std::log(v[i]);
        weight[blocks] = 1.0;
        size[blocks] = 1;
        start[blocks] = i;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] =
                (level[blocks - 2] * weight[blocks - 2] + level[blocks - 1] * weight[blocks - 1]) / w;
            weight[blocks - 2] = w;
            size[blocks - 2] += size[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b) {
        if (size[b] == 1) {
            out.push_back(v[start[b]]);
        } else {
            for (std::size_t r = 0; r < size[b]; ++r) out.push_back(std::exp(level[b]));
        }
    }
    return out;
}

}  // namespace detail

/// Monotone map between a solver's local tolerance parameter (atol = rtol)
/// and its achieved global accuracy eps over the calibration horizon.
/// Immutable once built; queries clamp to the sampled range.
class AccuracyChart {
  public:
    AccuracyChart() = default;

    /// `tol` ascending; eps is isotonically regularized to be nondecreasing
    /// before the log-log cubic interpolant is fitted.
    AccuracyChart(std::vector<double> tol, std::vector<double> eps, std::string system_id,
                  std::string method_id, double T)
        : tol_(std::move(tol)),
          eps_(detail::isotonic_nondecreasing(eps)),
          system_id_(std::move(system_id)),
          method_id_(std::move(method_id)),
          T_(T) {
        require(tol_.size() == eps_.size() && tol_.size() >= 4,
                "chart: need at least 4 samples");
        for (std::size_t i = 0; i < tol_.size(); ++i) {
            require(tol_[i] > 0.0 && eps_[i] > 0.0, "chart: samples must be positive");
            if (i) require(tol_[i] > tol_[i - 1], "chart: tol samples must be distinct");
        }
        std::vector<double> lx(tol_.size()), ly(eps_.size());
        for (std::size_t i = 0; i < tol_.size(); ++i) {
            lx[i] = std::log10(tol_[i]);
            ly[i] = std::log10(eps_[i]);
        }
        interp_ = std::make_shared<detail::LogLogInterp>(std::move(lx), std::move(ly));
    }

    const std::vector<double>& tol_samples() const { return tol_; }
    const std::vector<double>& eps_samples() const { return eps_; }
    const std::string& system_id() const { return system_id_; }
    const std::string& method_id() const { return method_id_; }
    double horizon() const { return T_; }

    /// Achieved accuracy predicted for a tolerance (clamped to the range).
    double eps_for_tol(double tol) const {
        if (tol <= tol_.front()) return eps_.front();
        if (tol >= tol_.back()) return eps_.back();
        return std::pow(10.0, (*interp_)(std::log10(tol)));
    }

  private:
    std::vector<double> tol_, eps_;
    std::string system_id_, method_id_;
    double T_ = 0.0;
    std::shared_ptr<const detail::LogLogInterp> interp_;
};

/// Inverse chart query: the loosest tolerance predicted to achieve accuracy
/// zeta. Clamped to the sampled range; `clamped` reports when that happened.
inline double tol_for_accuracy(const AccuracyChart& chart, double zeta, bool* clamped = nullptr) {
    require(zeta > 0.0, "tol_for_accuracy: zeta must be positive");
    if (clamped) *clamped = false;
    const auto& tol = chart.tol_samples();
    const auto& eps = chart.eps_samples();
    if (zeta <= eps.front()) {
        if (clamped) *clamped = zeta < eps.front();
        return tol.front();
    }
    if (zeta >= eps.back()) {
        if (clamped) *clamped = zeta > eps.back();
        return tol.back();
    }
    double lo = std::log10(tol.front()), hi = std::log10(tol.back());
    const double target = std::log10(zeta);
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::log10(chart.eps_for_tol(std::pow(10.0, mid))) <= target)
            lo = mid;
        else
            hi = mid;
    }
    return std::pow(10.0, lo);
}

/// Runs the solver sequentially over the calibration grid at each tolerance
/// and records the achieved accuracy eps = max_N ||y(T_N) - ref(T_N)|| (the
/// plain global error surrogate; see README). Failed propagations drop their
/// sample; fewer than 4 survivors is an error.
inline AccuracyChart build_chart(const OdeSystem& system, Method method, double T,
                                 std::vector<double> tol_list, const TimePartition& grid,
                                 const std::vector<Vec>& reference, int workers = 0,
                                 CostCounters* cost_out = nullptr) {
    grid.validate();
    require(grid.total() == T, "build_chart: grid must end at T");
    require(reference.size() == grid.boundaries.size(),
            "build_chart: reference does not match the grid");
    std::sort(tol_list.begin(), tol_list.end(), std::greater<double>());
    const auto dup = std::unique(tol_list.begin(), tol_list.end());
    if (dup != tol_list.end()) {
        std::cerr << "[apara] build_chart: collapsing duplicate tolerance samples\n";
        tol_list.erase(dup, tol_list.end());
    }
    require(tol_list.size() >= 4, "build_chart: need at least 4 distinct tolerances");
    for (double t : tol_list) require(t > 0.0, "build_chart: tolerances must be positive");

    const int n = static_cast<int>(tol_list.size());
    std::vector<double> eps(static_cast<std::size_t>(n), -1.0);
    std::vector<CostCounters> costs(static_cast<std::size_t>(n));
    parallel_for(n, workers, [&](int i) {
        SolverConfig cfg = solver_at(method, tol_list[static_cast<std::size_t>(i)]);
        Vec y = system.u0;
        double worst = 0.0;
        for (int N = 0; N < grid.intervals(); ++N) {
            auto res = propagate(system, grid.boundaries[N], grid.length(N), y, cfg);
            costs[static_cast<std::size_t>(i)] += res.cost;
            if (!res.ok()) {
                std::cerr << "[apara] build_chart: tol " << tol_list[static_cast<std::size_t>(i)]
                          << " failed (" << to_string(res.status) << ") on interval " << N
                          << "; sample excluded\n";
                return;
            }
            y = res.y_end;
            worst = std::max(worst,
                             state_norm(system, y - reference[static_cast<std::size_t>(N) + 1]));
        }
        eps[static_cast<std::size_t>(i)] = std::max(worst, 1e-16);
    });

    std::vector<double> tol_ok, eps_ok;
    for (int i = n - 1; i >= 0; --i) {  // ascending tol
        if (eps[static_cast<std::size_t>(i)] > 0.0) {
            tol_ok.push_back(tol_list[static_cast<std::size_t>(i)]);
            eps_ok.push_back(eps[static_cast<std::size_t>(i)]);
        }
        if (cost_out) *cost_out += costs[static_cast<std::size_t>(i)];
    }
    require(tol_ok.size() >= 4, "build_chart: fewer than 4 samples survived");
    return AccuracyChart(std::move(tol_ok), std::move(eps_ok), system.name, method_name(method), T);
}

inline void save_chart(const AccuracyChart& chart, const std::filesystem::path& path) {
    std::ofstream f(path);
    require(f.good(), "save_chart: cannot open " + path.string());
    f << "# apara accuracy chart\n";
    f << "# system: " << chart.system_id() << "\n";
    f << "# method: " << chart.method_id() << "\n";
    std::ostringstream t;
    t.precision(17);
    t << chart.horizon();
    f << "# T: " << t.str() << "\n";
    f << "# columns: tol eps\n";
    f.precision(17);
    f << std::scientific;
    for (std::size_t i = 0; i < chart.tol_samples().size(); ++i)
        f << chart.tol_samples()[i] << " " << chart.eps_samples()[i] << "\n";
    require(f.good(), "save_chart: write failed for " + path.string());
}

inline AccuracyChart load_chart(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "load_chart: cannot open " + path.string());
    std::string line, system_id, method_id;
    double T = 0.0;
    std::vector<double> tol, eps;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key;
            ss >> key;
            if (key == "system:") ss >> system_id;
            if (key == "method:") ss >> method_id;
            if (key == "T:") ss >> T;
            continue;
        }
        std::istringstream ss(line);
        double t = 0.0, e = 0.0;
        require(static_cast<bool>(ss >> t >> e), "load_chart: malformed line: " + line);
        tol.push_back(t);
        eps.push_back(e);
    }
    return AccuracyChart(std::move(tol), std::move(eps), system_id, method_id, T);
}

}  // namespace apara
