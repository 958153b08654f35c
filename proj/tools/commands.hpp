#pragma once

#include <filesystem>
#include <optional>

#include "experiment.hpp"

namespace selboost::cli {

// Each command writes its artifacts under cfg.output_dir and throws a
// selboost::Error subclass on failure.

/// prepared.csv, prepare_report.json
void cmd_prepare(const ExperimentConfig& cfg);
/// generated.csv (with truth columns), dgp.json
void cmd_generate(const ExperimentConfig& cfg);
/// report.json, two_step_model.json, heckman_fit.json, step1_scores.csv,
/// step2_scores.csv, predictions.csv, roc_step1.csv
void cmd_fit(const ExperimentConfig& cfg);
/// intervals.csv, ensemble.csv, bootstrap_report.json
void cmd_bootstrap(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& model);
/// propensity_report.json, propensity_groups.csv, propensity_units.csv
void cmd_propensity(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& model);
/// compare_report.json: both methods on selected and non-selected units, trained on every selected unit.
void cmd_compare(const ExperimentConfig& cfg);

/// Parses argv, runs the subcommand and maps failures to exit codes
/// (0 ok, 2 config, 3 data, 4 numerical).
int run(int argc, const char* const* argv);

}  // namespace selboost::cli
