// Command-line front end for the Blume-Capel metastability toolkit.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "bcm/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Blume-Capel metastability under Metropolis dynamics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool no_timestamp = false;
    app.add_option("--config", config_path, "key = value run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "base seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--workers", workers, "replica worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--no-timestamp", no_timestamp, "omit the creation-time header line");

    auto* validate = app.add_subcommand("validate", "check parameter conditions, print critical quantities");
    auto* energy = app.add_subcommand("energy", "energy report for a snapshot file");
    std::string snapshot_path;
    energy->add_option("snapshot", snapshot_path, "snapshot file")->required()->check(CLI::ExistingFile);
    auto* simulate = app.add_subcommand("simulate", "one trajectory from start to target");
    auto* exit_times = app.add_subcommand("exit-times", "hitting-time sweep over beta_grid with Arrhenius fit");
    auto* nucleation = app.add_subcommand("nucleation-map", "histogram of first supercritical cluster centroids");
    auto* verify = app.add_subcommand("landscape-verify", "run the landscape invariant suite");
    auto* snapshot = app.add_subcommand("snapshot", "write a named configuration as a snapshot");
    bcm::SnapshotRequest request;
    snapshot->add_option("which", request.which,
                         "sigma_c, sigma_c_tilde, sigma_s, sigma_F, minus1, zero, plus1 or a frame kind")
        ->required();
    snapshot->add_option("--m", request.m, "sigma_F width");
    snapshot->add_option("--n", request.n, "sigma_F height");
    snapshot->add_option("--side", request.side, "frame plus-square side");
    snapshot->add_option("--rotation", request.rotation, "quarter turns of the canonical placement");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? bcm::kOk : bcm::kUsage;
    }

    bcm::CommandContext ctx;
    try {
        if (!config_path.empty()) ctx.config = bcm::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return bcm::kUsage;
    }
    if (seed) ctx.config.seed = *seed;
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    ctx.workers = workers;
    ctx.timestamp = !no_timestamp;

    try {
        if (*validate) return bcm::cmd_validate(ctx);
        if (*energy) return bcm::cmd_energy(ctx, snapshot_path);
        if (*simulate) return bcm::cmd_simulate(ctx);
        if (*exit_times) return bcm::cmd_exit_times(ctx);
        if (*nucleation) return bcm::cmd_nucleation_map(ctx);
        if (*verify) return bcm::cmd_landscape_verify(ctx);
        if (*snapshot) return bcm::cmd_snapshot(ctx, request);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bcm::kUsage;
    }
    return bcm::kUsage;
}
