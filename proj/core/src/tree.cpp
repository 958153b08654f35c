#include "selboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "selboost/error.hpp"

namespace selboost {
namespace {

// Sufficient statistics of targets centered at the node mean.
struct Stats {
  double w = 0.0;
  double s = 0.0;  // sum w * (y - m)
  double q = 0.0;  // sum w * (y - m)^2
  std::size_t n = 0;

  void add(double wi, double ci) noexcept {
    w += wi;
    s += wi * ci;
    q += wi * ci * ci;
    ++n;
  }
  Stats& operator+=(const Stats& o) noexcept {
    w += o.w;
    s += o.s;
    q += o.q;
    n += o.n;
    return *this;
  }
  Stats operator-(const Stats& o) const noexcept { return {w - o.w, s - o.s, q - o.q, n - o.n}; }
  double sse() const noexcept { return w > 0.0 ? std::max(0.0, q - s * s / w) : 0.0; }
};

struct Candidate {
  bool valid = false;
  double sse = std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::int32_t> left_codes;
  std::vector<std::int32_t> right_codes;
  bool default_left = true;
};

class Builder {
 public:
  Builder(const FeatureMatrix& fm, std::span<const double> targets, std::span<const double> weights, TreeParams p)
      : fm_(fm), y_(targets), w_(weights), params_(p), in_node_(fm.n_rows(), 0) {}

  std::vector<TreeNode> build(std::vector<std::uint32_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::uint32_t> rows, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    double wsum = 0.0, wy = 0.0;
    for (auto r : rows) {
      wsum += w_[r];
      wy += w_[r] * y_[r];
    }
    const double mean = wsum > 0.0 ? wy / wsum : 0.0;
    Stats total;
    for (auto r : rows) total.add(w_[r], y_[r] - mean);
    {
      auto& node = nodes_[id];
      node.depth = depth;
      node.n_rows = rows.size();
      node.weight = total.w;
      node.sse = total.sse();
      node.value = total.w > 0.0 ? mean + total.s / total.w : mean;
    }

    const bool can_split = depth < params_.depth_limit &&
                           rows.size() >= 2 * static_cast<std::size_t>(params_.min_node) && total.w > 0.0 &&
                           total.sse() > 0.0;
    if (!can_split) return id;

    const Candidate best = find_split(rows, mean, total);
    const double parent_sse = total.sse();
    const double gain = parent_sse - best.sse;
    if (!best.valid || !(gain > 1e-12 * parent_sse)) return id;

    std::vector<std::uint32_t> left_rows, right_rows;
    const auto& col = fm_.column(best.feature);
    for (auto r : rows) {
      bool go_left;
      if (col.is_missing(r)) {
        go_left = best.default_left;
      } else if (best.categorical) {
        const auto code = col.codes()[r];
        go_left = std::find(best.left_codes.begin(), best.left_codes.end(), code) != best.left_codes.end();
      } else {
        go_left = col.values()[r] <= best.threshold;
      }
      (go_left ? left_rows : right_rows).push_back(r);
    }

    {
      auto& node = nodes_[id];
      node.is_leaf = false;
      node.feature = static_cast<std::int32_t>(best.feature);
      node.categorical = best.categorical;
      node.threshold = best.threshold;
      node.default_left = best.default_left;
      node.gain = gain;
      if (best.categorical) {
        for (auto c : best.left_codes) node.left_levels.push_back(col.levels()[static_cast<std::size_t>(c)]);
        for (auto c : best.right_codes) node.right_levels.push_back(col.levels()[static_cast<std::size_t>(c)]);
        std::sort(node.left_levels.begin(), node.left_levels.end());
        std::sort(node.right_levels.begin(), node.right_levels.end());
      }
    }
    const auto left_id = grow(std::move(left_rows), depth + 1);
    const auto right_id = grow(std::move(right_rows), depth + 1);
    nodes_[id].left = left_id;
    nodes_[id].right = right_id;
    return id;
  }

  // Missing rows follow the heavier observed side; ties go left.
  bool admissible(Stats& left, Stats& right, const Stats& missing, bool& default_left) const {
    default_left = left.w >= right.w;
    if (missing.n > 0) (default_left ? left : right) += missing;
    const auto min_node = static_cast<std::size_t>(params_.min_node);
    return left.n >= min_node && right.n >= min_node && left.w > 0.0 && right.w > 0.0;
  }

  Candidate find_split(const std::vector<std::uint32_t>& rows, double mean, const Stats& total) {
    Candidate best;
    // Near-ties within this tolerance keep the earlier candidate, so the choice
    // is stable under rescaling of the weights.
    const double tol = 1e-12 * std::max(total.sse(), std::numeric_limits<double>::min());
    auto consider = [&](Candidate&& c) {
      if (!best.valid || c.sse < best.sse - tol) best = std::move(c);
    };

    for (auto r : rows) in_node_[r] = 1;
    std::vector<std::uint32_t> ordered;
    for (std::size_t f = 0; f < fm_.features().size(); ++f) {
      const auto& col = fm_.column(f);
      Stats missing;
      if (col.is_numeric()) {
        const auto values = col.values();
        ordered.clear();
        const double n_node = static_cast<double>(rows.size());
        if (n_node * std::log2(n_node + 2.0) < static_cast<double>(fm_.n_rows())) {
          for (auto r : rows) {
            if (std::isnan(values[r])) {
              missing.add(w_[r], y_[r] - mean);
            } else {
              ordered.push_back(r);
            }
          }
          std::sort(ordered.begin(), ordered.end(), [&](std::uint32_t a, std::uint32_t b) {
            return values[a] < values[b] || (values[a] == values[b] && a < b);
          });
        } else {
          for (auto r : fm_.sorted_rows(f)) {
            if (in_node_[r]) ordered.push_back(r);
          }
          for (auto r : rows) {
            if (std::isnan(values[r])) missing.add(w_[r], y_[r] - mean);
          }
        }
        Stats observed;
        for (auto r : ordered) observed.add(w_[r], y_[r] - mean);
        Stats prefix;
        for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
          const auto r = ordered[i];
          prefix.add(w_[r], y_[r] - mean);
          const double v = values[r];
          const double next = values[ordered[i + 1]];
          if (v == next) continue;
          Stats left = prefix;
          Stats right = observed - prefix;
          bool default_left = true;
          if (!admissible(left, right, missing, default_left)) continue;
          Candidate c;
          c.valid = true;
          c.sse = left.sse() + right.sse();
          c.feature = f;
          double mid = v + (next - v) / 2.0;
          if (!(mid >= v && mid < next)) mid = v;
          c.threshold = mid;
          c.default_left = default_left;
          consider(std::move(c));
        }
      } else {
        const auto codes = col.codes();
        std::unordered_map<std::int32_t, Stats> per_level;
        for (auto r : rows) {
          const auto code = codes[r];
          if (code < 0) {
            missing.add(w_[r], y_[r] - mean);
          } else {
            per_level[code].add(w_[r], y_[r] - mean);
          }
        }
        if (per_level.size() < 2) continue;
        std::vector<std::pair<std::int32_t, Stats>> levels(per_level.begin(), per_level.end());
        const auto& names = col.levels();
        // Order by weighted mean target; zero-weight levels last; ties by level name.
        std::sort(levels.begin(), levels.end(), [&](const auto& a, const auto& b) {
          const double ma = a.second.w > 0.0 ? a.second.s / a.second.w : std::numeric_limits<double>::infinity();
          const double mb = b.second.w > 0.0 ? b.second.s / b.second.w : std::numeric_limits<double>::infinity();
          if (ma != mb) return ma < mb;
          return names[static_cast<std::size_t>(a.first)] < names[static_cast<std::size_t>(b.first)];
        });
        Stats observed;
        for (const auto& [code, st] : levels) observed += st;
        Stats prefix;
        for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
          prefix += levels[k].second;
          Stats left = prefix;
          Stats right = observed - prefix;
          bool default_left = true;
          if (!admissible(left, right, missing, default_left)) continue;
          Candidate c;
          c.valid = true;
          c.sse = left.sse() + right.sse();
          c.feature = f;
          c.categorical = true;
          c.default_left = default_left;
          for (std::size_t j = 0; j < levels.size(); ++j) {
            (j <= k ? c.left_codes : c.right_codes).push_back(levels[j].first);
          }
          consider(std::move(c));
        }
      }
    }
    for (auto r : rows) in_node_[r] = 0;
    return best;
  }

  const FeatureMatrix& fm_;
  std::span<const double> y_;
  std::span<const double> w_;
  TreeParams params_;
  std::vector<std::uint8_t> in_node_;
  std::vector<TreeNode> nodes_;
};

// A tree bound to the columns of one dataset.
class BoundTree {
 public:
  BoundTree(const Tree& tree, const Dataset& ds) : tree_(tree) {
    const auto& nodes = tree.nodes();
    columns_.resize(tree.feature_names().size(), nullptr);
    directions_.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.is_leaf) continue;
      const auto f = static_cast<std::size_t>(node.feature);
      if (!columns_[f]) {
        const auto& col = ds.column(tree.feature_names()[f]);
        if (col.is_numeric() == node.categorical) {
          throw SchemaError("feature '" + col.name() + "' has a different kind than at fit time");
        }
        columns_[f] = &col;
      }
      if (node.categorical) {
        const auto& levels = columns_[f]->levels();
        auto& dir = directions_[i];
        dir.assign(levels.size(), 0);
        for (std::size_t l = 0; l < levels.size(); ++l) {
          if (std::binary_search(node.left_levels.begin(), node.left_levels.end(), levels[l])) {
            dir[l] = 1;
          } else if (std::binary_search(node.right_levels.begin(), node.right_levels.end(), levels[l])) {
            dir[l] = -1;
          }
        }
      }
    }
  }

  double predict(std::size_t row) const {
    const auto& nodes = tree_.nodes();
    std::size_t i = 0;
    while (!nodes[i].is_leaf) {
      const auto& node = nodes[i];
      const auto* col = columns_[static_cast<std::size_t>(node.feature)];
      bool go_left = node.default_left;
      if (node.categorical) {
        const auto code = col->codes()[row];
        if (code >= 0) {
          const auto d = directions_[i][static_cast<std::size_t>(code)];
          if (d != 0) go_left = d > 0;
        }
      } else {
        const double v = col->values()[row];
        if (!std::isnan(v)) go_left = v <= node.threshold;
      }
      i = static_cast<std::size_t>(go_left ? node.left : node.right);
    }
    return nodes[i].value;
  }

 private:
  const Tree& tree_;
  std::vector<const Column*> columns_;
  std::vector<std::vector<std::int8_t>> directions_;
};

}  // namespace

Tree::Tree(std::vector<std::string> feature_names, std::vector<TreeNode> nodes, int depth_limit, int min_node)
    : feature_names_(std::move(feature_names)), nodes_(std::move(nodes)), depth_limit_(depth_limit),
      min_node_(min_node) {
  if (nodes_.empty()) throw FitError("tree must have at least one node");
  for (const auto& node : nodes_) {
    if (node.is_leaf) continue;
    const auto n = static_cast<std::int32_t>(nodes_.size());
    if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n) {
      throw FitError("internal tree node without two valid children");
    }
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= feature_names_.size()) {
      throw FitError("tree split references an unknown feature");
    }
  }
}

Tree Tree::constant(double value, std::vector<std::string> feature_names) {
  TreeNode leaf;
  leaf.value = value;
  return Tree(std::move(feature_names), {leaf}, 0, 1);
}

int Tree::depth() const noexcept {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, static_cast<int>(n.depth));
  return d;
}

std::size_t Tree::n_leaves() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

double Tree::predict(const FeatureRecord& row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf) {
    const auto& node = nodes_[i];
    const auto& name = feature_names_[static_cast<std::size_t>(node.feature)];
    const auto it = row.find(name);
    if (it == row.end()) throw SchemaError("record lacks feature '" + name + "'");
    bool go_left = node.default_left;
    if (const auto* level = std::get_if<std::string>(&it->second)) {
      if (!node.categorical) throw SchemaError("feature '" + name + "' expects a number");
      if (std::binary_search(node.left_levels.begin(), node.left_levels.end(), *level)) {
        go_left = true;
      } else if (std::binary_search(node.right_levels.begin(), node.right_levels.end(), *level)) {
        go_left = false;
      }
    } else if (const auto* v = std::get_if<double>(&it->second)) {
      if (node.categorical) throw SchemaError("feature '" + name + "' expects a level");
      if (!std::isnan(*v)) go_left = *v <= node.threshold;
    }
    i = static_cast<std::size_t>(go_left ? node.left : node.right);
  }
  return nodes_[i].value;
}

std::vector<double> Tree::predict(const Dataset& rows) const {
  const BoundTree bound(*this, rows);
  std::vector<double> out(rows.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bound.predict(i);
  return out;
}

std::map<std::string, double> Tree::split_gains() const {
  std::map<std::string, double> out;
  for (const auto& n : nodes_) {
    if (!n.is_leaf) out[feature_names_[static_cast<std::size_t>(n.feature)]] += n.gain;
  }
  return out;
}

FeatureMatrix::FeatureMatrix(const Dataset& ds, std::vector<std::string> features)
    : data_(ds), features_(std::move(features)) {
  if (ds.n_rows() > std::numeric_limits<std::uint32_t>::max()) throw FitError("too many rows");
  for (const auto& name : features_) {
    const auto& col = data_.column(name);
    columns_.push_back(&col);
    std::vector<std::uint32_t> order;
    if (col.is_numeric()) {
      const auto values = col.values();
      for (std::size_t r = 0; r < values.size(); ++r) {
        if (!std::isnan(values[r])) order.push_back(static_cast<std::uint32_t>(r));
      }
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
      });
    }
    sorted_.push_back(std::move(order));
  }
}

Tree fit_tree(const FeatureMatrix& fm, std::span<const std::size_t> rows, std::span<const double> targets,
              std::span<const double> weights, TreeParams params) {
  if (params.depth_limit < 0) throw ConfigError("depth_limit must be non-negative");
  if (params.min_node < 1) throw ConfigError("min_node must be at least 1");
  if (targets.size() != fm.n_rows() || weights.size() != fm.n_rows()) {
    throw AlignmentError("targets and weights must align with dataset rows");
  }
  if (rows.empty()) throw FitError("cannot fit a tree on an empty dataset");
  double total = 0.0;
  std::vector<std::uint32_t> node_rows;
  node_rows.reserve(rows.size());
  for (auto r : rows) {
    if (r >= fm.n_rows()) throw AlignmentError("row index out of range");
    if (!(weights[r] >= 0.0)) throw DomainError("weights must be non-negative");
    if (!std::isfinite(targets[r])) throw DomainError("targets must be finite");
    total += weights[r];
    node_rows.push_back(static_cast<std::uint32_t>(r));
  }
  if (!(total > 0.0)) throw FitError("cannot fit a tree with zero total weight");
  Builder builder(fm, targets, weights, params);
  return Tree(fm.features(), builder.build(std::move(node_rows)), params.depth_limit, params.min_node);
}

Tree fit_tree(const Dataset& ds, std::span<const double> targets, std::span<const double> weights, int depth_limit,
              int min_node) {
  if (ds.n_rows() == 0) throw FitError("cannot fit a tree on an empty dataset");
  const FeatureMatrix fm(ds, ds.feature_names());
  std::vector<std::size_t> rows(ds.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(fm, rows, targets, weights, TreeParams{depth_limit, min_node});
}

double predict_tree(const Tree& tree, const FeatureRecord& row) { return tree.predict(row); }

FeatureRecord record_at(const Dataset& ds, std::size_t i, std::span<const std::string> features) {
  FeatureRecord rec;
  for (const auto& name : features) {
    const auto& col = ds.column(name);
    if (col.is_missing(i)) {
      rec.emplace(name, std::monostate{});
    } else if (col.is_numeric()) {
      rec.emplace(name, col.values()[i]);
    } else {
      rec.emplace(name, std::string(*col.level_at(i)));
    }
  }
  return rec;
}

}  // namespace selboost
