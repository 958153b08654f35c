#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selboost/dataset.hpp"

namespace selboost {

/// Replaces missing cells of a numeric column by the unweighted mean of the
/// observed cells. Throws ImputationError when every cell is missing.
Dataset impute_mean(const Dataset& ds, const std::string& column);

/// v -> ln(v + offset). Missing cells stay missing. Throws DomainError naming
/// the first row where v + offset <= 0.
Dataset log_transform(const Dataset& ds, const std::string& column, double offset = 0.0);

struct RemovedRow {
  std::int64_t row_id;
  std::string column;
  double value;      // the cell on its original scale
  double threshold;  // q75 + k * IQR of the log values
};

struct FilterResult {
  Dataset data;
  /// One entry per (row, column) that breached its threshold.
  std::vector<RemovedRow> removed;
  /// Distinct removed row ids, ascending.
  std::vector<std::int64_t> removed_row_ids;
};

/// Drops every row where, for any listed column, ln(value) > q75 + k * IQR of
/// that column's log values. Quantiles are computed before any removal, on
/// observed cells, with linear interpolation. Missing cells never trigger.
FilterResult filter_outliers_log(const Dataset& ds, std::span<const std::string> columns, double k = 1.5);

/// Keeps every row whose selection flag equals `keep_all_flag`. Within each
/// stratum (cross-classification of `strata_columns`) keeps round(fraction * size)
/// of the remaining rows, at least one per non-empty stratum, chosen uniformly
/// at random. Rows stay in their original order.
Dataset stratified_undersample(const Dataset& ds, std::span<const std::string> strata_columns, int keep_all_flag,
                               double target_fraction, std::uint64_t seed);

/// Uniform random partition into round(train_fraction * n) training rows and
/// the rest; both parts keep the original row order and ids.
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Index form of train_test_split.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);

/// Fraction of missing cells per column, in column order.
std::vector<std::pair<std::string, double>> missing_fractions(const Dataset& ds);

/// Drops columns whose missing fraction exceeds `max_missing_fraction`
/// (outcome and selection flag are never dropped).
Dataset drop_sparse_columns(const Dataset& ds, double max_missing_fraction);

/// Drops rows where `column` is missing.
Dataset drop_missing_rows(const Dataset& ds, const std::string& column);

}  // namespace selboost
