// Command-line driver: calibrate accuracy charts, run single experiments,
// sweep processor counts and targets, and tabulate convergence bounds.

#include "apara/apara.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string algorithm;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_algorithm) {
    cmd->add_option("--config", args.config_path, "Path to the JSON run configuration")
        ->required();
    cmd->add_option("--out", args.out_dir, "Output directory (overrides output.dir)");
    cmd->add_flag("--serial", args.serial, "Force sequential execution");
    if (with_algorithm)
        cmd->add_option("--algorithm", args.algorithm, "classical|adaptive|both")
            ->check(CLI::IsMember({"classical", "adaptive", "both"}));
}

apara::RunConfig load(const CommonArgs& args, bool calibrate) {
    apara::RunConfig cfg = apara::load_config(args.config_path);
    if (!args.out_dir.empty()) {
        // calibrate writes charts, so --out moves the chart anchor itself
        if (calibrate)
            cfg.out_dir = args.out_dir;
        else
            cfg.report_dir = args.out_dir;
    }
    if (!args.algorithm.empty()) cfg.algorithm = args.algorithm;
    if (args.serial) cfg.workers = 1;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive parareal experiments"};
    app.require_subcommand(1);

    CommonArgs calibrate_args, run_args, sweep_args, bounds_args;
    auto* calibrate = app.add_subcommand("calibrate", "Build tolerance-to-accuracy charts");
    add_common(calibrate, calibrate_args, false);
    auto* run = app.add_subcommand("run", "Run classical and/or adaptive parareal");
    add_common(run, run_args, true);
    auto* sweep = app.add_subcommand("sweep", "Sweep processor counts and targets");
    add_common(sweep, sweep_args, true);
    auto* bounds = app.add_subcommand("bounds", "Tabulate convergence bounds against observed errors");
    add_common(bounds, bounds_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (calibrate->parsed()) return apara::cmd_calibrate(load(calibrate_args, true));
        if (run->parsed()) return apara::cmd_run(load(run_args, false));
        if (sweep->parsed()) return apara::cmd_sweep(load(sweep_args, false));
        if (bounds->parsed()) return apara::cmd_bounds(load(bounds_args, false));
    } catch (const apara::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
