#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selboost/dataset.hpp"

namespace selboost {

/// A single cell handed to predict(): missing, a number, or a level name.
using FeatureValue = std::variant<std::monostate, double, std::string>;
using FeatureRecord = std::map<std::string, FeatureValue, std::less<>>;

struct TreeNode {
  bool is_leaf = true;
  /// Leaf prediction; for internal nodes, the weighted mean of the node's targets.
  double value = 0.0;

  std::int32_t feature = -1;  // index into Tree::feature_names()
  bool categorical = false;
  double threshold = 0.0;                 // numeric: value <= threshold goes left
  std::vector<std::string> left_levels;   // categorical: levels sent left (sorted)
  std::vector<std::string> right_levels;  // categorical: levels sent right (sorted)
  bool default_left = true;               // missing / unseen cells
  std::int32_t left = -1;
  std::int32_t right = -1;

  std::int32_t depth = 0;
  std::size_t n_rows = 0;
  double weight = 0.0;
  double sse = 0.0;   // weighted SSE of targets around the node mean
  double gain = 0.0;  // sse - (left.sse + right.sse); zero for leaves
};

/// Fitted depth-limited regression tree. Node 0 is the root.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<std::string> feature_names, std::vector<TreeNode> nodes, int depth_limit, int min_node);

  static Tree constant(double value, std::vector<std::string> feature_names = {});

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int depth_limit() const noexcept { return depth_limit_; }
  int min_node() const noexcept { return min_node_; }

  int depth() const noexcept;
  std::size_t n_leaves() const noexcept;
  bool has_split() const noexcept { return nodes_.size() > 1; }

  double predict(const FeatureRecord& row) const;
  std::vector<double> predict(const Dataset& rows) const;

  /// Sum of split gains per feature name.
  std::map<std::string, double> split_gains() const;

 private:
  std::vector<std::string> feature_names_;
  std::vector<TreeNode> nodes_;
  int depth_limit_ = 0;
  int min_node_ = 1;
};

/// Feature columns of one dataset prepared for repeated tree fitting: numeric
/// columns are presorted once.
class FeatureMatrix {
 public:
  FeatureMatrix(const Dataset& ds, std::vector<std::string> features);

  const Dataset& data() const noexcept { return data_; }
  const std::vector<std::string>& features() const noexcept { return features_; }
  std::size_t n_rows() const noexcept { return data_.n_rows(); }
  const Column& column(std::size_t f) const noexcept { return *columns_[f]; }
  /// Rows with an observed value, ordered by (value, row).
  std::span<const std::uint32_t> sorted_rows(std::size_t f) const noexcept { return sorted_[f]; }

 private:
  Dataset data_;
  std::vector<std::string> features_;
  std::vector<const Column*> columns_;
  std::vector<std::vector<std::uint32_t>> sorted_;
};

struct TreeParams {
  int depth_limit = 2;
  int min_node = 10;
};

/// Weighted least-squares tree on `rows` of `fm`. `targets` and `weights` are
/// indexed by dataset row. Each split minimizes the weighted SSE of the two
/// children; ties go to the lowest feature index, then the smallest threshold
/// (or first prefix in mean order for categorical features).
Tree fit_tree(const FeatureMatrix& fm, std::span<const std::size_t> rows, std::span<const double> targets,
              std::span<const double> weights, TreeParams params);

/// Convenience form over all rows and all features of `ds`.
Tree fit_tree(const Dataset& ds, std::span<const double> targets, std::span<const double> weights, int depth_limit,
              int min_node);

double predict_tree(const Tree& tree, const FeatureRecord& row);

/// Extracts row `i` of `ds` as a record over `features`.
FeatureRecord record_at(const Dataset& ds, std::size_t i, std::span<const std::string> features);

}  // namespace selboost
