#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance runner. They are deliberately naive: no presorting, no prefix
// scans, no shared code with the library beyond the Dataset container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "selboost/dataset.hpp"
#include "selboost/random.hpp"

namespace oracle {

struct Instance {
  // Feature f is categorical when levels[f] > 0; its values are then level codes.
  std::vector<std::vector<double>> x;
  std::vector<int> levels;
  std::vector<double> target;
  std::vector<double> weight;
};

inline double weighted_sse(const Instance& in, const std::vector<std::size_t>& rows) {
  double sw = 0.0, swt = 0.0;
  for (auto i : rows) {
    sw += in.weight[i];
    swt += in.weight[i] * in.target[i];
  }
  if (sw <= 0.0) return 0.0;
  const double mean = swt / sw;
  double sse = 0.0;
  for (auto i : rows) sse += in.weight[i] * (in.target[i] - mean) * (in.target[i] - mean);
  return sse;
}

// All binary partitions of `rows` a single split can produce: numeric
// thresholds at every midpoint, categorical splits as every level subset.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> candidate_splits(
    const Instance& in, const std::vector<std::size_t>& rows) {
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
  for (std::size_t f = 0; f < in.x.size(); ++f) {
    if (in.levels[f] > 0) {
      const int L = in.levels[f];
      for (std::uint32_t mask = 1; mask + 1 < (1u << L); ++mask) {
        std::pair<std::vector<std::size_t>, std::vector<std::size_t>> p;
        for (auto i : rows) {
          const auto code = static_cast<int>(in.x[f][i]);
          ((mask >> code) & 1u ? p.first : p.second).push_back(i);
        }
        out.push_back(std::move(p));
      }
    } else {
      std::vector<double> vals;
      for (auto i : rows) vals.push_back(in.x[f][i]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        const double thr = 0.5 * (vals[k] + vals[k + 1]);
        std::pair<std::vector<std::size_t>, std::vector<std::size_t>> p;
        for (auto i : rows) (in.x[f][i] <= thr ? p.first : p.second).push_back(i);
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

// Greedy depth-limited tree by exhaustive split enumeration at each node;
// returns the weighted SSE of the resulting leaves.
inline double greedy_tree_sse(const Instance& in, const std::vector<std::size_t>& rows, int depth,
                              std::size_t min_node) {
  const double parent = weighted_sse(in, rows);
  if (depth == 0 || rows.size() < 2 * min_node) return parent;
  double best = std::numeric_limits<double>::infinity();
  const std::pair<std::vector<std::size_t>, std::vector<std::size_t>>* best_split = nullptr;
  const auto cands = candidate_splits(in, rows);
  for (const auto& c : cands) {
    if (c.first.size() < min_node || c.second.size() < min_node) continue;
    const double s = weighted_sse(in, c.first) + weighted_sse(in, c.second);
    if (s < best) {
      best = s;
      best_split = &c;
    }
  }
  if (!best_split || !(parent - best > 1e-12 * parent)) return parent;
  return greedy_tree_sse(in, best_split->first, depth - 1, min_node) +
         greedy_tree_sse(in, best_split->second, depth - 1, min_node);
}

inline Instance random_instance(selboost::Rng& rng, std::size_t n, std::size_t n_features, bool allow_categorical) {
  Instance in;
  in.x.resize(n_features);
  in.levels.assign(n_features, 0);
  for (std::size_t f = 0; f < n_features; ++f) {
    const bool cat = allow_categorical && rng.uniform() < 0.3;
    if (cat) in.levels[f] = 2 + static_cast<int>(rng.below(3));
    for (std::size_t i = 0; i < n; ++i) {
      if (cat) {
        in.x[f].push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(in.levels[f]))));
      } else if (rng.uniform() < 0.5) {
        in.x[f].push_back(std::round(rng.normal() * 4.0) / 4.0);  // repeated values
      } else {
        in.x[f].push_back(rng.normal());
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    in.target.push_back(rng.normal() + (in.x[0][i] > 0.0 ? 1.5 : 0.0));
    in.weight.push_back(0.1 + 2.0 * rng.uniform());
  }
  return in;
}

inline selboost::Dataset to_dataset(const Instance& in) {
  std::vector<selboost::Column> cols;
  for (std::size_t f = 0; f < in.x.size(); ++f) {
    const std::string name = "f" + std::to_string(f);
    if (in.levels[f] > 0) {
      std::vector<std::int32_t> codes;
      for (double v : in.x[f]) codes.push_back(static_cast<std::int32_t>(v));
      std::vector<std::string> lv;
      for (int l = 0; l < in.levels[f]; ++l) lv.push_back("L" + std::to_string(l));
      cols.push_back(selboost::Column::categorical(name, std::move(codes), std::move(lv)));
    } else {
      cols.push_back(selboost::Column::numeric(name, in.x[f]));
    }
  }
  return selboost::Dataset(std::move(cols));
}

// Mann-Whitney by counting every positive-negative pair.
inline double pair_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) num += 1.0;
      if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / pairs;
}

inline selboost::Dataset numeric_frame(const std::vector<std::pair<std::string, std::vector<double>>>& columns,
                                       std::optional<std::string> outcome = std::nullopt,
                                       std::optional<std::string> flag = std::nullopt) {
  std::vector<selboost::Column> cols;
  for (const auto& [name, v] : columns) cols.push_back(selboost::Column::numeric(name, v));
  return selboost::Dataset(std::move(cols), std::move(outcome), std::move(flag));
}

}  // namespace oracle
