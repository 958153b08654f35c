#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selboost/dataset.hpp"

namespace selboost {

/// Fits on `train` (a resample) with `seed` and returns predictions for `score_rows`.
using FitPredictFn =
    std::function<std::vector<double>(const Dataset& train, const Dataset& score_rows, std::uint64_t seed)>;

struct BootstrapEnsemble {
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> replicate_seeds;
  /// Row ids of the scored units, aligned with each prediction vector.
  std::vector<std::int64_t> unit_ids;
  /// predictions[j][i]: replicate j, unit i.
  std::vector<std::vector<double>> predictions;
};

/// Replicate j resamples train.n_rows() rows with replacement using
/// derive_seed(seed, "bootstrap", j), then calls fit_fn with
/// derive_seed(seed, "bootstrap_fit", j). Replicates may run on `threads` workers.
BootstrapEnsemble bootstrap_fit_predict(const Dataset& train, const Dataset& score_rows, const FitPredictFn& fit_fn,
                                        std::size_t replicates, std::uint64_t seed, int threads = 1);

using Interval = std::pair<double, double>;

/// Per-unit empirical quantiles (linear interpolation) of the replicate predictions.
std::vector<Interval> interval(const BootstrapEnsemble& ens, double lower_q, double upper_q);

/// Fraction of units with lo <= truth <= hi.
double coverage(std::span<const Interval> intervals, std::span<const double> truth);

/// unit_id,replicate,prediction
std::string ensemble_csv(const BootstrapEnsemble& ens);
/// unit_id,lo,hi
std::string interval_csv(std::span<const std::int64_t> unit_ids, std::span<const Interval> intervals);

}  // namespace selboost
