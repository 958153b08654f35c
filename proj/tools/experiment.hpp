#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selboost/boost.hpp"
#include "selboost/csv.hpp"
#include "selboost/heckman.hpp"
#include "selboost/synth.hpp"

namespace selboost::cli {

struct InputSpec {
  std::optional<std::filesystem::path> csv;
  Schema schema;
  std::string missing_token;
  std::optional<SyntheticDgp> dgp;
  std::size_t n = 0;
};

struct StepGrid {
  std::vector<BoostConfig> grid;
  Protocol protocol = Holdout{};
  Metric metric = Metric::auc;
};

struct HeckmanSpec {
  std::vector<std::string> x1;
  std::vector<std::string> x2;
  HeckmanScale scale = HeckmanScale::linear;
  bool smearing = false;
};

struct ExperimentConfig {
  std::filesystem::path base_dir;
  InputSpec input;
  std::string outcome = "y";
  std::optional<std::string> selection_flag;
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  std::optional<std::string> truth_outcome;
  std::optional<std::string> truth_mean;
  std::optional<std::string> bid;
  std::optional<std::string> groups;
  nlohmann::json preprocess = nlohmann::json::array();
  StepGrid step1;
  StepGrid step2;
  double clip_floor = 1e-3;
  HeckmanSpec heckman;
  double train_fraction = 0.7;
  std::size_t bootstrap_b = 100;
  double lower_q = 0.05;
  double upper_q = 0.95;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  int threads = 1;
};

/// Parses the JSON config; relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Reads the configured input (CSV or generated DGP sample with truth columns).
Dataset load_input(const ExperimentConfig& cfg);

struct Prepared {
  Dataset data;
  nlohmann::json report;
};
/// Applies the preprocessing steps in order; errors name the failing step.
Prepared apply_preprocess(const ExperimentConfig& cfg, Dataset ds);

/// Feature list after `features` / `exclude` and removal of outcome, flag and truth/bid columns.
std::vector<std::string> model_features(const ExperimentConfig& cfg, const Dataset& ds);

}  // namespace selboost::cli
