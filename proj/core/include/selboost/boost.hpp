#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selboost/dataset.hpp"
#include "selboost/loss.hpp"
#include "selboost/tree.hpp"

namespace selboost {

struct BoostConfig {
  int n_iter = 100;
  int depth = 2;
  int min_node = 10;
  double shrinkage = 0.1;
  double bag_fraction = 0.5;
  LossKind loss = LossKind::squared_error;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  bool operator==(const BoostConfig&) const = default;
};

struct BoostStage {
  double beta = 0.0;
  Tree tree;
};

class BoostModel {
 public:
  BoostModel() = default;
  BoostModel(BoostConfig config, std::vector<std::string> features, double f0, std::vector<BoostStage> stages,
             std::vector<double> train_loss_path = {});

  const BoostConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& features() const noexcept { return features_; }
  double f0() const noexcept { return f0_; }
  const std::vector<BoostStage>& stages() const noexcept { return stages_; }
  const std::vector<double>& train_loss_path() const noexcept { return train_loss_path_; }
  /// Normalized split-gain share per feature; all zero when no stage split.
  const std::map<std::string, double>& importance() const noexcept { return importance_; }

  /// F(x) on the link scale, using the first `n_stages` stages (all by default).
  std::vector<double> predict(const Dataset& rows, std::optional<std::size_t> n_stages = std::nullopt) const;
  /// 1 / (1 + exp(-F)); only meaningful for logistic models.
  std::vector<double> predict_proba(const Dataset& rows) const;

  /// Calls visit(m, F) after stage m = 0 (intercept only), 1, ..., up to max_stages.
  void staged_predict(const Dataset& rows, std::size_t max_stages,
                      const std::function<void(std::size_t, std::span<const double>)>& visit) const;

  /// Copy keeping the first m stages; config().n_iter becomes m.
  BoostModel truncated(std::size_t m) const;

 private:
  BoostConfig config_;
  std::vector<std::string> features_;
  double f0_ = 0.0;
  std::vector<BoostStage> stages_;
  std::vector<double> train_loss_path_;
  std::map<std::string, double> importance_;
};

/// Gradient boosting over `features` (default: every column except the
/// outcome and the selection flag). `weights` empty means the dataset's weights.
BoostModel fit_gbm(const Dataset& ds, const std::string& outcome, std::span<const double> weights,
                   const BoostConfig& config, const std::vector<std::string>& features = {});

std::vector<double> predict_gbm(const BoostModel& model, const Dataset& rows);

std::map<std::string, double> variable_importance(const BoostModel& model);

enum class Metric { auc, r2, mse };
std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view name);

struct Holdout {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};
struct KFold {
  int k = 5;
  std::uint64_t seed = 0;
};
using Protocol = std::variant<Holdout, KFold>;

struct ScoreRow {
  std::size_t config_index = 0;
  BoostConfig config;
  int fold = 0;  // 0 for holdout
  Metric metric = Metric::auc;
  double score = 0.0;
};

struct TuneResult {
  std::size_t best_index = 0;
  BoostConfig best;
  double best_score = 0.0;
  /// Ordered by (config_index, fold).
  std::vector<ScoreRow> table;
};

/// Scores each config on held-out rows (unweighted metric) and picks the best
/// mean score; ties go to the lowest grid index. Configs that differ only in
/// n_iter share one fit, scored at each stage count by truncation.
TuneResult tune_grid(const Dataset& ds, const std::string& outcome, std::span<const double> weights,
                     const std::vector<BoostConfig>& grid, const Protocol& protocol, Metric metric,
                     const std::vector<std::string>& features = {}, int threads = 1);

/// Cartesian product in the order n_iter (fastest), depth, shrinkage.
std::vector<BoostConfig> make_grid(std::span<const int> n_iters, std::span<const int> depths,
                                   std::span<const double> shrinkages, const BoostConfig& base);

/// config_index,n_iter,depth,min_node,shrinkage,bag_fraction,loss,fold,metric,score
std::string score_table_csv(const TuneResult& result);

/// Model features by default rule: every column but the outcome and the selection flag.
std::vector<std::string> default_features(const Dataset& ds, const std::string& outcome);

}  // namespace selboost
