#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selboost {

/// Mann-Whitney AUC with midranks; ties count one half.
double auc(std::span<const double> scores, std::span<const double> labels);

/// Weighted mean squared error; empty `weights` means unit weights.
double mse(std::span<const double> pred, std::span<const double> truth, std::span<const double> weights = {});

enum class R2Variant { determination, relative_mse };

/// determination = 1 - MSE/Var(truth), relative_mse = MSE/Var(truth).
/// Var uses the population (1/n) form so the two always sum to 1.
double r2(std::span<const double> pred, std::span<const double> truth, R2Variant variant);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};
/// ROC curve vertices, thresholds descending, starting at (0, 0).
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const double> labels);
std::string roc_csv(std::span<const RocPoint> points);

struct GroupPropensity {
  std::size_t size = 0;
  double total_bit = 0.0;
  double total_bind = 0.0;      // floored per unit at 0
  double propensity = 0.0;      // total_bind / total_bit
  double total_bind_raw = 0.0;  // without flooring
  double propensity_raw = 0.0;
};

struct PropensityReport {
  /// bind_i / bit_i, NaN where bit_i <= 0.
  std::vector<double> per_unit;
  std::vector<double> bind;  // floored
  double overall = 0.0;
  double overall_raw = 0.0;
  double total_bit = 0.0;
  double total_bid = 0.0;
  double total_bind = 0.0;
  double total_bind_raw = 0.0;
  std::size_t floored_count = 0;
  std::size_t nonpositive_bit_count = 0;
  std::map<std::string, GroupPropensity> by_group;
};

PropensityReport propensity_report(std::span<const double> bit_hat, std::span<const double> bid,
                                   std::optional<std::span<const std::string>> groups = std::nullopt);

/// group,size,total_bit,total_bind,propensity,total_bind_raw,propensity_raw plus a final "overall" row.
std::string propensity_group_csv(const PropensityReport& report);
/// unit_id,bit_hat,bid,bind,propensity
std::string propensity_unit_csv(const PropensityReport& report, std::span<const std::int64_t> unit_ids,
                                std::span<const double> bit_hat, std::span<const double> bid);

}  // namespace selboost
