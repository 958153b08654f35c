#include "selboost/transform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "selboost/csv.hpp"
#include "selboost/error.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"

namespace selboost {
namespace {

const Column& numeric_column(const Dataset& ds, const std::string& name) {
  const auto& col = ds.column(name);
  if (!col.is_numeric()) throw SchemaError("column '" + name + "' must be numeric");
  return col;
}

}  // namespace

Dataset impute_mean(const Dataset& ds, const std::string& column) {
  const auto& col = numeric_column(ds, column);
  const auto values = col.values();
  CompensatedSum sum;
  std::size_t observed = 0;
  for (double v : values) {
    if (!std::isnan(v)) {
      sum += v;
      ++observed;
    }
  }
  if (observed == 0) throw ImputationError("column '" + column + "' has no observed values to average");
  if (observed == values.size()) return ds;
  const double mean = sum.value() / static_cast<double>(observed);
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) {
    if (std::isnan(v)) v = mean;
  }
  return ds.with_column(Column::numeric(column, std::move(out)));
}

Dataset log_transform(const Dataset& ds, const std::string& column, double offset) {
  const auto& col = numeric_column(ds, column);
  std::vector<double> out(col.values().begin(), col.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) continue;
    const double shifted = out[i] + offset;
    if (!(shifted > 0.0)) {
      throw DomainError("log_transform('" + column + "'): value + offset = " + format_double(shifted) +
                        " is not positive at row id " + std::to_string(ds.row_ids()[i]));
    }
    out[i] = std::log(shifted);
  }
  return ds.with_column(Column::numeric(column, std::move(out)));
}

FilterResult filter_outliers_log(const Dataset& ds, std::span<const std::string> columns, double k) {
  if (!(k > 0.0)) throw ConfigError("filter_outliers_log: k must be positive");
  std::vector<bool> drop(ds.n_rows(), false);
  FilterResult result;
  for (const auto& name : columns) {
    const auto values = numeric_column(ds, name).values();
    std::vector<double> logs;
    logs.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) continue;
      if (!(values[i] > 0.0)) {
        throw DomainError("filter_outliers_log('" + name + "'): non-positive value at row id " +
                          std::to_string(ds.row_ids()[i]));
      }
      logs.push_back(std::log(values[i]));
    }
    if (logs.size() < 4) throw QuantileError("filter_outliers_log('" + name + "'): fewer than 4 observed values");
    std::sort(logs.begin(), logs.end());
    const double q25 = quantile_sorted(logs, 0.25);
    const double q75 = quantile_sorted(logs, 0.75);
    const double threshold = q75 + k * (q75 - q25);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) continue;
      if (std::log(values[i]) > threshold) {
        drop[i] = true;
        result.removed.push_back({ds.row_ids()[i], name, values[i], threshold});
      }
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < drop.size(); ++i) {
    if (drop[i]) {
      result.removed_row_ids.push_back(ds.row_ids()[i]);
    } else {
      keep.push_back(i);
    }
  }
  std::sort(result.removed_row_ids.begin(), result.removed_row_ids.end());
  std::sort(result.removed.begin(), result.removed.end(),
            [](const RemovedRow& a, const RemovedRow& b) { return a.row_id < b.row_id; });
  result.data = result.removed_row_ids.empty() ? ds : ds.take_rows(keep);
  return result;
}

Dataset stratified_undersample(const Dataset& ds, std::span<const std::string> strata_columns, int keep_all_flag,
                               double target_fraction, std::uint64_t seed) {
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw ConfigError("stratified_undersample: target_fraction must lie in (0, 1]");
  }
  const auto flags = ds.flag_values();
  std::vector<const Column*> strata;
  for (const auto& name : strata_columns) strata.push_back(&ds.column(name));

  // Stratum key: per-column cell identity (level code, or the numeric value's bits).
  std::map<std::vector<std::int64_t>, std::vector<std::size_t>> groups;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    if (flags[i] == keep_all_flag) {
      keep.push_back(i);
      continue;
    }
    std::vector<std::int64_t> key;
    key.reserve(strata.size());
    for (const auto* col : strata) {
      if (col->is_numeric()) {
        const double v = col->values()[i];
        key.push_back(std::isnan(v) ? INT64_MIN : std::bit_cast<std::int64_t>(v == 0.0 ? 0.0 : v));
      } else {
        key.push_back(col->codes()[i]);
      }
    }
    groups[std::move(key)].push_back(i);
  }

  std::uint64_t stratum_index = 0;
  for (const auto& [key, rows] : groups) {
    Rng rng(derive_seed(seed, "stratum", stratum_index++));
    auto take = static_cast<std::size_t>(std::llround(target_fraction * static_cast<double>(rows.size())));
    take = std::clamp<std::size_t>(take, 1, rows.size());
    for (auto pick : sample_without_replacement(rng, rows.size(), take)) keep.push_back(rows[pick]);
  }
  std::sort(keep.begin(), keep.end());
  return ds.take_rows(keep);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (n < 2) throw SplitError("cannot split fewer than 2 rows");
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Rng rng(derive_seed(seed, "train_test_split"));
  auto train = sample_without_replacement(rng, n, n_train);
  std::vector<std::size_t> test;
  test.reserve(n - n_train);
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < train.size() && train[t] == i) {
      ++t;
    } else {
      test.push_back(i);
    }
  }
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(ds.n_rows(), train_fraction, seed);
  return {ds.take_rows(train), ds.take_rows(test)};
}

std::vector<std::pair<std::string, double>> missing_fractions(const Dataset& ds) {
  std::vector<std::pair<std::string, double>> out;
  const double n = static_cast<double>(std::max<std::size_t>(ds.n_rows(), 1));
  for (std::size_t c = 0; c < ds.n_columns(); ++c) {
    const auto& col = ds.column(c);
    out.emplace_back(col.name(), static_cast<double>(col.missing_count()) / n);
  }
  return out;
}

Dataset drop_sparse_columns(const Dataset& ds, double max_missing_fraction) {
  std::vector<std::string> drop;
  for (const auto& [name, fraction] : missing_fractions(ds)) {
    if (ds.outcome() && *ds.outcome() == name) continue;
    if (ds.selection_flag() && *ds.selection_flag() == name) continue;
    if (fraction > max_missing_fraction) drop.push_back(name);
  }
  return drop.empty() ? ds : ds.without_columns(drop);
}

Dataset drop_missing_rows(const Dataset& ds, const std::string& column) {
  const auto& col = ds.column(column);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    if (!col.is_missing(i)) keep.push_back(i);
  }
  if (keep.size() == ds.n_rows()) return ds;
  return ds.take_rows(keep);
}

}  // namespace selboost
