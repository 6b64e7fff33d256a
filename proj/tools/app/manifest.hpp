#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "experiments.hpp"

namespace metastab::app {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes every table and document into `dir` and returns the manifest
/// file list: path (relative to dir), bytes and sha256 per file.
nlohmann::json write_outputs(const ExperimentOutputs& outputs, const std::filesystem::path& dir);

struct RunInfo {
    std::string started_at;  // UTC, ISO 8601
    double wall_seconds = 0.0;
    std::size_t workers = 1;
};

nlohmann::json make_manifest(const ExperimentConfig& config, const ExperimentOutputs& outputs,
                             const nlohmann::json& files, const RunInfo& info);

std::string utc_timestamp();

}  // namespace metastab::app
