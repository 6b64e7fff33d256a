#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "app/config.hpp"
#include "app/experiments.hpp"
#include "app/manifest.hpp"
#include "metastab/errors.hpp"
#include "metastab/version.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

}  // namespace

int main(int argc, char** argv) {
    using namespace metastab;
    using namespace metastab::app;

    CLI::App cli{"Transition-state experiments for a discretized double-well field"};
    cli.set_version_flag("--version", version_string());
    std::string experiment;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> workers;
    cli.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    cli.add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    cli.add_option("--seed", seed, "Override the config seed");
    cli.add_option("--out", out_dir, "Override the output directory");
    cli.add_option("--workers", workers, "Worker threads (0 = all cores)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    ExperimentConfig config;
    try {
        config = load_config(config_path, experiment_from_string(experiment));
        if (seed) config.seed = *seed;
        if (out_dir) config.output = *out_dir;
        if (workers) config.workers = *workers;
        config.validate();
        prepare_output_dir(config.output);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }

    RunInfo info;
    info.started_at = utc_timestamp();
    info.workers = effective_workers(config);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentOutputs outputs;
    try {
        outputs = run_experiment(config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return exit_config;
    }
    info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        const auto files = write_outputs(outputs, config.output);
        const auto manifest = make_manifest(config, outputs, files, info);
        std::ofstream mf(config.output / "manifest.json");
        mf << manifest.dump(2) << '\n';
        if (!mf) throw std::runtime_error("cannot write manifest.json");
        for (const auto& f : files) std::cout << (config.output / f["path"].get<std::string>()).string() << '\n';
        std::cout << (config.output / "manifest.json").string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return 1;
    }

    if (outputs.failures > 0) {
        std::cerr << outputs.failures << " task(s) failed; see manifest.json\n";
        return exit_numerical;
    }
    return 0;
}
