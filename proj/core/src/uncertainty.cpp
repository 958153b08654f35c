#include "selboost/uncertainty.hpp"

#include <algorithm>
#include <sstream>

#include "selboost/csv.hpp"
#include "selboost/error.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"

namespace selboost {
namespace {

[[noreturn]] void rethrow_with_replicate(const Error& e, std::size_t j) {
  const std::string what = "bootstrap replicate " + std::to_string(j) + ": " + e.what();
  switch (e.error_class()) {
    case ErrorClass::config:
      throw ConfigError(what);
    case ErrorClass::data:
      throw DataError(what);
    case ErrorClass::numerical:
      break;
  }
  throw FitError(what);
}

}  // namespace

BootstrapEnsemble bootstrap_fit_predict(const Dataset& train, const Dataset& score_rows, const FitPredictFn& fit_fn,
                                        std::size_t replicates, std::uint64_t seed, int threads) {
  if (replicates < 2) throw ConfigError("bootstrap needs B >= 2");
  if (train.n_rows() == 0) throw FitError("bootstrap on an empty training set");
  BootstrapEnsemble ens;
  ens.replicates = replicates;
  ens.seed = seed;
  ens.unit_ids.assign(score_rows.row_ids().begin(), score_rows.row_ids().end());
  ens.predictions.resize(replicates);
  for (std::size_t j = 0; j < replicates; ++j) ens.replicate_seeds.push_back(derive_seed(seed, "bootstrap", j));

  parallel_for(replicates, threads, [&](std::size_t j) {
    try {
      Rng rng(ens.replicate_seeds[j]);
      const auto idx = sample_with_replacement(rng, train.n_rows(), train.n_rows());
      auto pred = fit_fn(train.resample_rows(idx), score_rows, derive_seed(seed, "bootstrap_fit", j));
      if (pred.size() != score_rows.n_rows()) {
        throw AlignmentError("fit function returned " + std::to_string(pred.size()) + " predictions for " +
                             std::to_string(score_rows.n_rows()) + " units");
      }
      ens.predictions[j] = std::move(pred);
    } catch (const Error& e) {
      rethrow_with_replicate(e, j);
    }
  });
  return ens;
}

std::vector<Interval> interval(const BootstrapEnsemble& ens, double lower_q, double upper_q) {
  if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
    throw ConfigError("interval: need 0 <= lower_q < upper_q <= 1");
  }
  const std::size_t n = ens.unit_ids.size();
  std::vector<Interval> out(n);
  std::vector<double> column(ens.predictions.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ens.predictions.size(); ++j) column[j] = ens.predictions[j][i];
    std::sort(column.begin(), column.end());
    out[i] = {quantile_sorted(column, lower_q), quantile_sorted(column, upper_q)};
  }
  return out;
}

double coverage(std::span<const Interval> intervals, std::span<const double> truth) {
  if (intervals.size() != truth.size()) throw AlignmentError("coverage: intervals and truth differ in length");
  if (truth.empty()) throw AlignmentError("coverage of zero units");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (intervals[i].first <= truth[i] && truth[i] <= intervals[i].second) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string ensemble_csv(const BootstrapEnsemble& ens) {
  std::ostringstream out;
  out << "unit_id,replicate,prediction\n";
  for (std::size_t i = 0; i < ens.unit_ids.size(); ++i) {
    for (std::size_t j = 0; j < ens.predictions.size(); ++j) {
      out << ens.unit_ids[i] << ',' << j << ',' << format_double(ens.predictions[j][i]) << '\n';
    }
  }
  return out.str();
}

std::string interval_csv(std::span<const std::int64_t> unit_ids, std::span<const Interval> intervals) {
  if (unit_ids.size() != intervals.size()) throw AlignmentError("interval_csv: ids and intervals differ in length");
  std::ostringstream out;
  out << "unit_id,lo,hi\n";
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    out << unit_ids[i] << ',' << format_double(intervals[i].first) << ',' << format_double(intervals[i].second)
        << '\n';
  }
  return out.str();
}

}  // namespace selboost
