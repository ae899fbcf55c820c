#pragma once

#include "apara/analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apara {

/// Invalid or inconsistent user input (exit code 1 at the CLI).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One experiment description: problem, decomposition, schedule, solvers,
/// chart locations, cost model and outputs.
struct RunConfig {
    // problem
    std::string problem = "brusselator";
    std::map<std::string, double> problem_params;
    double T = 20.0;
    Norm norm = Norm::Max;
    // partition
    int n_intervals = 20;
    bool balance = true;
    // schedule
    ScheduleMode mode = ScheduleMode::Practical;
    double eps_g = 0.1;
    double eta = 1e-8;
    std::optional<int> K;
    // solvers
    SolverConfig coarse = solver_at(Method::ExplicitRk54, 1e-4);
    SolverConfig fine = solver_at(Method::RadauIia5, 1e-8);
    // charts
    std::filesystem::path chart_coarse_path;
    std::filesystem::path chart_fine_path;
    // calibration
    std::vector<double> calib_tol_coarse;
    std::vector<double> calib_tol_fine;
    // cost model
    CostModel cost_model;
    bool weights_explicit = false;
    // run
    std::string algorithm = "both";
    int K_max = 0;
    int min_iterations = 0;
    bool exact_fine = false;
    std::uint64_t seed = 0;
    int workers = 0;  // 0 -> min(N, cores)
    // sweep
    std::vector<int> sweep_n;
    std::vector<double> sweep_eta;
    // bounds
    int bounds_samples = 24;
    double bounds_inflation = 2.0;
    // output
    std::filesystem::path out_dir = "out";        // config-anchored; charts default here
    std::filesystem::path report_dir;             // CLI --out override for reports only

    std::filesystem::path reports() const { return report_dir.empty() ? out_dir : report_dir; }
    std::filesystem::path coarse_chart() const {
        return chart_coarse_path.empty() ? out_dir / "chart_coarse.txt" : chart_coarse_path;
    }
    std::filesystem::path fine_chart() const {
        return chart_fine_path.empty() ? out_dir / "chart_fine.txt" : chart_fine_path;
    }
};

namespace detail {

using json = nlohmann::json;

inline double positive(const json& j, const char* key, double dflt) {
    const double v = j.value(key, dflt);
    if (!(v > 0.0)) throw ConfigError(std::string("config: ") + key + " must be positive");
    return v;
}

inline SolverConfig parse_solver(const json& j, SolverConfig base) {
    if (j.contains("method")) base.method = method_from_name(j.at("method").get<std::string>());
    if (j.contains("atol")) base.atol = j.at("atol").get<double>();
    if (j.contains("rtol")) base.rtol = j.at("rtol").get<double>();
    if (j.contains("h_init")) base.h_init = j.at("h_init").get<double>();
    if (j.contains("h_min")) base.h_min = j.at("h_min").get<double>();
    if (j.contains("h_max")) base.h_max = j.at("h_max").get<double>();
    if (j.contains("newton_max_iters")) base.newton_max_iters = j.at("newton_max_iters").get<int>();
    if (j.contains("newton_tol")) base.newton_tol = j.at("newton_tol").get<double>();
    if (j.contains("warm_start")) {
        const auto s = j.at("warm_start").get<std::string>();
        if (s == "previous_time")
            base.warm_start = WarmStart::PreviousTime;
        else if (s == "previous_iteration")
            base.warm_start = WarmStart::PreviousIteration;
        else if (s == "dynamics_corrected")
            base.warm_start = WarmStart::DynamicsCorrected;
        else
            throw ConfigError("config: unknown warm_start: " + s);
    }
    try {
        base.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return base;
}

}  // namespace detail

inline RunConfig load_config(const std::filesystem::path& path) {
    using detail::json;
    std::ifstream f(path);
    if (!f.good()) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }

    RunConfig cfg;
    try {
        if (j.contains("problem")) {
            const auto& p = j.at("problem");
            cfg.problem = p.value("name", cfg.problem);
            cfg.T = detail::positive(p, "T", cfg.T);
            if (p.contains("params"))
                for (const auto& [k, v] : p.at("params").items())
                    cfg.problem_params[k] = v.get<double>();
            const auto norm = p.value("norm", std::string("max"));
            if (norm == "max")
                cfg.norm = Norm::Max;
            else if (norm == "euclid")
                cfg.norm = Norm::Euclid;
            else
                throw ConfigError("config: unknown norm: " + norm);
        }
        if (j.contains("partition")) {
            const auto& p = j.at("partition");
            cfg.n_intervals = p.value("n_intervals", cfg.n_intervals);
            if (cfg.n_intervals < 1) throw ConfigError("config: n_intervals must be >= 1");
            cfg.balance = p.value("balance", cfg.balance);
        }
        if (j.contains("schedule")) {
            const auto& p = j.at("schedule");
            cfg.mode = schedule_mode_from_name(p.value("mode", schedule_mode_name(cfg.mode)));
            cfg.eps_g = detail::positive(p, "eps_g", cfg.eps_g);
            cfg.eta = detail::positive(p, "eta", cfg.eta);
            if (p.contains("K") && !p.at("K").is_null()) cfg.K = p.at("K").get<int>();
        }
        if (j.contains("solvers")) {
            const auto& p = j.at("solvers");
            if (p.contains("coarse")) cfg.coarse = detail::parse_solver(p.at("coarse"), cfg.coarse);
            if (p.contains("fine")) cfg.fine = detail::parse_solver(p.at("fine"), cfg.fine);
        }
        if (j.contains("charts")) {
            const auto& p = j.at("charts");
            if (p.contains("coarse")) cfg.chart_coarse_path = p.at("coarse").get<std::string>();
            if (p.contains("fine")) cfg.chart_fine_path = p.at("fine").get<std::string>();
        }
        if (j.contains("calibration")) {
            const auto& p = j.at("calibration");
            if (p.contains("tolerances")) {
                const auto& t = p.at("tolerances");
                if (t.contains("coarse")) cfg.calib_tol_coarse = t.at("coarse").get<std::vector<double>>();
                if (t.contains("fine")) cfg.calib_tol_fine = t.at("fine").get<std::vector<double>>();
            }
        }
        if (j.contains("cost_model")) {
            const auto& p = j.at("cost_model");
            const auto mode = p.value("mode", std::string("measured"));
            if (mode == "measured")
                cfg.cost_model.mode = CostModel::Mode::Measured;
            else if (mode == "synthetic")
                cfg.cost_model.mode = CostModel::Mode::Synthetic;
            else
                throw ConfigError("config: unknown cost model mode: " + mode);
            cfg.cost_model.alpha = detail::positive(p, "alpha", cfg.cost_model.alpha);
            cfg.cost_model.comm_delay = p.value("comm_delay", 0.0);
            if (p.contains("weights")) {
                const auto& w = p.at("weights");
                cfg.cost_model.weights.accepted_steps =
                    w.value("accepted_steps", cfg.cost_model.weights.accepted_steps);
                cfg.cost_model.weights.rejected_steps =
                    w.value("rejected_steps", cfg.cost_model.weights.rejected_steps);
                cfg.cost_model.weights.rhs_evals = w.value("rhs_evals", cfg.cost_model.weights.rhs_evals);
                cfg.cost_model.weights.jac_evals = w.value("jac_evals", cfg.cost_model.weights.jac_evals);
                cfg.cost_model.weights.lin_solves = w.value("lin_solves", cfg.cost_model.weights.lin_solves);
                cfg.weights_explicit = true;
            }
        }
        if (j.contains("run")) {
            const auto& p = j.at("run");
            cfg.algorithm = p.value("algorithm", cfg.algorithm);
            if (cfg.algorithm != "classical" && cfg.algorithm != "adaptive" && cfg.algorithm != "both")
                throw ConfigError("config: algorithm must be classical|adaptive|both");
            cfg.K_max = p.value("K_max", cfg.K_max);
            cfg.min_iterations = p.value("min_iterations", cfg.min_iterations);
            cfg.exact_fine = p.value("exact_fine", cfg.exact_fine);
            cfg.seed = p.value("seed", cfg.seed);
            cfg.workers = p.value("workers", cfg.workers);
        }
        if (j.contains("sweep")) {
            const auto& p = j.at("sweep");
            if (p.contains("n_intervals")) cfg.sweep_n = p.at("n_intervals").get<std::vector<int>>();
            if (p.contains("eta")) cfg.sweep_eta = p.at("eta").get<std::vector<double>>();
        }
        if (j.contains("bounds")) {
            const auto& p = j.at("bounds");
            cfg.bounds_samples = p.value("samples", cfg.bounds_samples);
            cfg.bounds_inflation = p.value("inflation", cfg.bounds_inflation);
        }
        if (j.contains("output")) {
            cfg.out_dir = j.at("output").value("dir", cfg.out_dir.string());
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

/// Built-in calibration tolerance ladders (log-spaced), loosest first. The
/// fine ladder spans the loose end too: the adaptive schedule's early
/// accuracies sit between eps_g and eta and must be reachable by the chart.
inline std::vector<double> default_calibration_tolerances(Method m) {
    std::vector<double> tols;
    const int hi = 1;
    const int lo = m == Method::ExplicitRk54 ? 9 : 12;
    for (int k = hi; k <= lo; ++k) tols.push_back(std::pow(10.0, -k));
    return tols;
}

inline OdeSystem system_from_config(const RunConfig& cfg) {
    OdeSystem sys = make_system(cfg.problem, cfg.problem_params);
    sys.norm = cfg.norm;
    return sys;
}

}  // namespace apara
