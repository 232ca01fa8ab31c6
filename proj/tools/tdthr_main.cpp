#include <iostream>

#include "CLI11.hpp"

#include "tdthr/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Two-hop QoS routing simulator for wireless sensor networks"};
    app.require_subcommand(1);

    tdthr::RunOptions run;
    std::string trace;
    auto* run_cmd = app.add_subcommand("run", "Run one simulation and write its metrics row");
    run_cmd->add_option("--config", run.config, "Config file")->required();
    run_cmd->add_option("--seed", run.seed, "Random seed")->required();
    run_cmd->add_option("--out", run.out, "Output CSV path")->required();
    run_cmd->add_option("--trace", trace, "Event trace path");

    tdthr::SweepOptions sweep;
    std::string sweep_out;
    unsigned jobs = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep_cmd->add_option("--spec", sweep.spec, "Sweep spec file")->required();
    auto* out_opt = sweep_cmd->add_option("--out", sweep_out, "Output directory");
    auto* jobs_opt = sweep_cmd->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    std::filesystem::path validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config and print it resolved");
    validate_cmd->add_option("--config", validate_path, "Config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tdthr::kExitValidation;
    }

    if (*run_cmd) {
        if (!trace.empty()) run.trace = trace;
        return tdthr::cmd_run(run, std::cout, std::cerr);
    }
    if (*sweep_cmd) {
        if (*out_opt) sweep.out = sweep_out;
        if (*jobs_opt) sweep.jobs = jobs;
        return tdthr::cmd_sweep(sweep, std::cout, std::cerr);
    }
    return tdthr::cmd_validate(validate_path, std::cout, std::cerr);
}
