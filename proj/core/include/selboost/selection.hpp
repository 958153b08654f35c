#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "selboost/boost.hpp"
#include "selboost/dataset.hpp"
#include "selboost/loss.hpp"
#include "selboost/synth.hpp"

namespace selboost {

struct TwoStepOptions {
  double clip_floor = 1e-3;
  /// Out-of-fold step-1 probabilities instead of in-sample ones.
  bool cross_fit = false;
  int cross_fit_folds = 5;
  /// Adds the estimated probability as an extra step-2 feature named "pi_hat".
  bool pi_as_covariate = false;
  /// Features for both steps; empty means every column but the outcome and the flag.
  std::vector<std::string> features;
};

class TwoStepModel {
 public:
  TwoStepModel() = default;
  TwoStepModel(BoostModel step1, BoostModel step2, std::vector<double> pi_hat, std::vector<double> nu,
               std::vector<std::size_t> selected_rows, TwoStepOptions options);

  const BoostModel& step1() const noexcept { return step1_; }
  const BoostModel& step2() const noexcept { return step2_; }
  /// Clipped inclusion probabilities for every training row.
  const std::vector<double>& pi_hat() const noexcept { return pi_hat_; }
  /// Mean-one inverse weights, aligned with selected_rows().
  const std::vector<double>& nu() const noexcept { return nu_; }
  const std::vector<std::size_t>& selected_rows() const noexcept { return selected_rows_; }
  const TwoStepOptions& options() const noexcept { return options_; }
  double clip_floor() const noexcept { return options_.clip_floor; }

  /// Step-2 predictions for `rows`.
  std::vector<double> predict(const Dataset& rows) const;
  /// Clipped step-1 probabilities for `rows`.
  std::vector<double> inclusion_probabilities(const Dataset& rows) const;

 private:
  BoostModel step1_;
  BoostModel step2_;
  std::vector<double> pi_hat_;
  std::vector<double> nu_;
  std::vector<std::size_t> selected_rows_;
  TwoStepOptions options_;
};

/// Features used by both steps when none are given explicitly.
std::vector<std::string> selection_features(const Dataset& ds);

/// Fits the step-1 classifier on every row, targeting the selection flag.
BoostModel fit_inclusion_model(const Dataset& ds, const BoostConfig& config,
                               const std::vector<std::string>& features = {});

/// Per-row step-1 probabilities, clipped below at clip_floor.
std::vector<double> estimate_inclusion_probabilities(const Dataset& ds, const BoostConfig& config,
                                                     double clip_floor = 1e-3,
                                                     const std::vector<std::string>& features = {});

/// 1 / max(pi, clip_floor) over units with selected[i] == 1, normalized to mean 1.
std::vector<double> inverse_weights(std::span<const double> pi_hat, std::span<const double> selected,
                                    double clip_floor = 1e-3);

TwoStepModel fit_two_step(const Dataset& ds, const std::string& outcome, const BoostConfig& step1_config,
                          const BoostConfig& step2_config, const TwoStepOptions& options = {});

struct BiasCheckReport {
  std::size_t replications = 0;
  std::size_t n = 0;
  /// Monte Carlo mean of the full-sample loss.
  double population_loss = 0.0;
  double population_se = 0.0;
  /// Selected-unit mean of loss * P(s=1) / P(s=1|x).
  double weighted_sample_loss = 0.0;
  double weighted_se = 0.0;
  /// Selected-unit plain mean of the loss.
  double unweighted_sample_loss = 0.0;
  double unweighted_se = 0.0;
  /// Per-replication values, in replication order.
  std::vector<double> weighted_by_replication;
  std::vector<double> unweighted_by_replication;
};

using Predictor = std::function<std::vector<double>(const Dataset&)>;

/// Monte Carlo check of the reweighting identity on a dgp with known
/// selection probabilities. Replication r uses seed derive_seed(seed, "replication", r).
BiasCheckReport check_bias_correction(const SyntheticDgp& dgp, const Predictor& predictor, const Loss& loss,
                                      std::size_t n, std::size_t replications, std::uint64_t seed,
                                      int threads = 1);

/// {step1: {auc, importance}, weights: {min, max, mean, clipped_count},
///  step2: {r2_determination, r2_relative_mse, mse}}. Step-2 metrics use
/// `eval` when given, else the selected training rows.
nlohmann::json pipeline_report(const TwoStepModel& model, const Dataset& train, const std::string& outcome,
                               const std::optional<Dataset>& eval = std::nullopt);

}  // namespace selboost
