#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metastab/lattice.hpp"

namespace metastab::app {

/// Raised for any invalid or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { TransitionSweep, SingleTrajectory, PrefactorCurve, Bifurcation, Ergodicity, MeasureCheck };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);  // throws ConfigError
const std::vector<std::string>& experiment_names();

/// Every knob of every experiment with its resolved value. Fields that an
/// experiment does not use are ignored by it but still echoed.
struct ExperimentConfig {
    Experiment experiment = Experiment::TransitionSweep;
    SystemParams system;
    double alpha = 1.0;  // stiffness when the potential is quadratic

    std::vector<double> delta_grid;
    std::vector<double> beta_grid;     // explicit inverse temperatures
    std::vector<double> barrier_grid;  // beta Delta E values; used when beta_grid is empty
    std::vector<std::size_t> n_grid;

    std::size_t ensemble = 200;
    double horizon = 0.0;      // absolute T; 0 means horizon_tau * tau^c
    double horizon_tau = 2.0;
    std::optional<double> dt;  // absolute step
    double dt_factor = 0.125;  // fraction of stable_dt when dt is unset
    bool stratify = false;
    std::vector<double> gamma_grid;

    std::size_t seeds = 9;
    double dump_interval = 0.1;  // time between reduced-variable rows

    std::size_t samples = 10000;
    std::vector<double> concentration_betas;
    double epsilon = 0.5;
    double box_constant = 1.0;
    std::size_t terms = 10000;

    std::uint64_t seed = 0;
    std::filesystem::path output = "out";
    std::size_t workers = 0;  // 0 = hardware concurrency

    void validate() const;  // throws ConfigError
};

/// Experiment-specific defaults, before any user value is applied.
ExperimentConfig default_config(Experiment e);

/// Parses a config document on top of the defaults for `e`. Unknown keys,
/// wrong types and out-of-range values are ConfigErrors. A document-level
/// "experiment" entry must agree with `e`.
ExperimentConfig parse_config(const nlohmann::json& doc, Experiment e);
ExperimentConfig load_config(const std::filesystem::path& path, Experiment e);

/// Creates the directory if needed and checks that it accepts files.
void prepare_output_dir(const std::filesystem::path& dir);

nlohmann::json to_json(const ExperimentConfig& c);

std::size_t effective_workers(const ExperimentConfig& c);

}  // namespace metastab::app
