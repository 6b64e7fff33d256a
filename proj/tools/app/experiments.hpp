#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "metastab/critical_points.hpp"
#include "metastab/csv.hpp"
#include "metastab/measures.hpp"
#include "metastab/tst.hpp"

namespace metastab::app {

/// Saddle, both minimizers and their spectra at one parameter point.
struct Landscape {
    SystemParams params;
    CriticalPoint saddle, plus, minus;
    Spectrum saddle_spectrum, plus_spectrum, minus_spectrum;
    DividingSurface surface;

    double barrier_plus() const { return saddle.energy - plus.energy; }
    CriticalData saddle_data() const { return {saddle.energy, saddle_spectrum.eigenvalues}; }
    CriticalData plus_data() const { return {plus.energy, plus_spectrum.eigenvalues}; }
    CriticalData minus_data() const { return {minus.energy, minus_spectrum.eigenvalues}; }
};

Landscape build_landscape(const SystemParams& params);

/// Derived seed of task `index` under the run seed.
std::uint64_t task_seed(std::uint64_t seed, std::uint64_t index);

/// Integration step for a run: config dt, else dt_factor * stable_dt.
double run_dt(const ExperimentConfig& c, const SystemParams& params);

struct SweepRow {
    double delta = 0.0;
    double beta = 0.0;
    double barrier = 0.0;  // Delta E_+
    double horizon = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::size_t saddle_index = 0;
    RateReport report;
    std::optional<ResidencyCorrelation> residency;  // single-trajectory runs
    std::size_t trajectories_crossing = 0;
    double max_energy_drift = 0.0;
    std::string error;  // non-empty when the row failed
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

SweepResult run_transition_sweep(const ExperimentConfig& c);
SweepResult run_single_trajectory(const ExperimentConfig& c);

struct PrefactorRow {
    double delta = 0.0;
    double lambda = 0.0;
    double barrier = 0.0;
    std::size_t saddle_index = 0;
    std::string error;
};

std::vector<PrefactorRow> run_prefactor_curve(const ExperimentConfig& c);

struct SaddleProfile {
    double delta = 0.0;
    std::vector<double> u;
};

struct BifurcationResult {
    std::vector<BifurcationRow> rows;
    std::vector<SaddleProfile> profiles;  // saddle shapes at a few deltas
};

BifurcationResult run_bifurcation(const ExperimentConfig& c);

struct ErgodicityRun {
    double delta = 0.0;
    double beta = 0.0;
    std::size_t seed_index = 0;
    std::vector<ReducedRow> rows;
    ErgodicityReport report;
    CrossingRecord crossings;
    ResidencyCorrelation residency;
    double max_energy_drift = 0.0;
    std::string error;
};

struct ErgodicityResult {
    std::vector<ErgodicityRun> runs;  // delta-major, then seed
};

ErgodicityResult run_ergodicity(const ExperimentConfig& c);

struct MeasureRow {
    std::size_t n = 0;
    std::string sampler;  // canonical | microcanonical
    CharFunctionalEstimate estimate;
    double limit = 0.0;
    double z_real = 0.0;  // (estimate - limit) / stderr
    double z_imag = 0.0;
    double cov_max_error = 0.0;   // max |C_emp - K / beta|
    double cov_max_stderr = 0.0;  // largest per-entry sampling std
    double cov_max_z = 0.0;       // max per-entry standardized error
};

struct ConcentrationRow {
    double beta = 0.0;
    ConcentrationBound bound;
};

struct MeasureCheckResult {
    std::vector<MeasureRow> rows;
    std::vector<ConcentrationRow> concentration;
};

MeasureCheckResult run_measure_check(const ExperimentConfig& c);

/// One output artifact, ready to be written by the single writer.
struct OutputTable {
    std::string file;
    CsvTable table;
};

struct OutputJson {
    std::string file;
    nlohmann::json doc;
};

struct ExperimentOutputs {
    std::vector<OutputTable> tables;
    std::vector<OutputJson> documents;
    nlohmann::json tasks = nlohmann::json::array();  // per-task seeds and status
    std::size_t failures = 0;
};

ExperimentOutputs tabulate(const SweepResult& r, bool single);
ExperimentOutputs tabulate(const std::vector<PrefactorRow>& r);
ExperimentOutputs tabulate(const BifurcationResult& r);
ExperimentOutputs tabulate(const ErgodicityResult& r);
ExperimentOutputs tabulate(const MeasureCheckResult& r);

/// Runs the configured experiment and tabulates it.
ExperimentOutputs run_experiment(const ExperimentConfig& c);

}  // namespace metastab::app
