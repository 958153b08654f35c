#include "selboost/boost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "selboost/csv.hpp"
#include "selboost/error.hpp"
#include "selboost/metrics.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"
#include "selboost/transform.hpp"

namespace selboost {
namespace {

// Weighted mean loss over `rows` at predictions f (+ step * h when h is given).
double mean_loss(const Loss& loss, std::span<const std::size_t> rows, std::span<const double> y,
                 std::span<const double> f, std::span<const double> w, double step = 0.0,
                 std::span<const double> h = {}) {
  CompensatedSum num, den;
  for (std::size_t i : rows) {
    const double fi = h.empty() ? f[i] : f[i] + step * h[i];
    num += w[i] * loss.evaluate(y[i], fi);
    den += w[i];
  }
  return num.value() / den.value();
}

std::vector<double> resolve_weights(const Dataset& ds, std::span<const double> weights) {
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(ds.weights().begin(), ds.weights().end());
  if (w.size() != ds.n_rows()) {
    throw AlignmentError("weights have " + std::to_string(w.size()) + " entries for " + std::to_string(ds.n_rows()) +
                         " rows");
  }
  CompensatedSum total;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("weights must be finite and non-negative");
    total += v;
  }
  if (!(total.value() > 0.0)) throw FitError("zero total weight");
  // Mean-one normalization.
  const double mean = total.value() / static_cast<double>(w.size());
  for (double& v : w) v /= mean;
  return w;
}

std::vector<std::string> resolve_features(const Dataset& ds, const std::string& outcome,
                                          const std::vector<std::string>& features) {
  if (features.empty()) return default_features(ds, outcome);
  for (const auto& f : features) {
    if (!ds.has_column(f)) throw SchemaError("feature '" + f + "' is not a column");
    if (f == outcome) throw ConfigError("outcome '" + outcome + "' cannot also be a feature");
  }
  return features;
}

bool higher_is_better(Metric m) { return m != Metric::mse; }

void check_metric_loss(Metric metric, LossKind loss) {
  const bool ok = metric == Metric::auc ? loss == LossKind::logistic : loss == LossKind::squared_error;
  if (!ok) {
    throw ConfigError("metric '" + std::string(to_string(metric)) + "' does not apply to loss '" +
                      std::string(to_string(loss)) + "'");
  }
}

double score(Metric metric, std::span<const double> pred, std::span<const double> truth) {
  switch (metric) {
    case Metric::auc:
      return auc(pred, truth);
    case Metric::r2:
      return r2(pred, truth, R2Variant::determination);
    case Metric::mse:
      return mse(pred, truth);
  }
  return 0.0;
}

}  // namespace

void BoostConfig::validate() const {
  if (n_iter < 0) throw ConfigError("n_iter must be >= 0");
  if (depth < 0) throw ConfigError("depth must be >= 0");
  if (min_node < 1) throw ConfigError("min_node must be >= 1");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in [0, 1]");
  if (!(bag_fraction > 0.0 && bag_fraction <= 1.0)) throw ConfigError("bag_fraction must lie in (0, 1]");
}

BoostModel::BoostModel(BoostConfig config, std::vector<std::string> features, double f0,
                       std::vector<BoostStage> stages, std::vector<double> train_loss_path)
    : config_(config),
      features_(std::move(features)),
      f0_(f0),
      stages_(std::move(stages)),
      train_loss_path_(std::move(train_loss_path)) {
  if (stages_.size() > static_cast<std::size_t>(std::max(config_.n_iter, 0))) {
    throw ConfigError("model has more stages than n_iter");
  }
  double total = 0.0;
  for (const auto& f : features_) importance_[f] = 0.0;
  for (const auto& stage : stages_) {
    for (const auto& [name, gain] : stage.tree.split_gains()) {
      importance_[name] += gain;
      total += gain;
    }
  }
  if (total > 0.0) {
    for (auto& [name, v] : importance_) v /= total;
  }
}

std::vector<double> BoostModel::predict(const Dataset& rows, std::optional<std::size_t> n_stages) const {
  std::vector<double> out;
  const std::size_t m = std::min(n_stages.value_or(stages_.size()), stages_.size());
  staged_predict(rows, m, [&](std::size_t stage, std::span<const double> f) {
    if (stage == m) out.assign(f.begin(), f.end());
  });
  return out;
}

std::vector<double> BoostModel::predict_proba(const Dataset& rows) const {
  auto f = predict(rows);
  for (double& v : f) v = sigmoid(v);
  return f;
}

void BoostModel::staged_predict(const Dataset& rows, std::size_t max_stages,
                                const std::function<void(std::size_t, std::span<const double>)>& visit) const {
  std::vector<double> f(rows.n_rows(), f0_);
  visit(0, f);
  const std::size_t m = std::min(max_stages, stages_.size());
  for (std::size_t s = 0; s < m; ++s) {
    const double step = config_.shrinkage * stages_[s].beta;
    const auto h = stages_[s].tree.predict(rows);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += step * h[i];
    visit(s + 1, f);
  }
}

BoostModel BoostModel::truncated(std::size_t m) const {
  m = std::min(m, stages_.size());
  BoostConfig cfg = config_;
  cfg.n_iter = static_cast<int>(m);
  std::vector<BoostStage> stages(stages_.begin(), stages_.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<double> path(train_loss_path_.begin(),
                           train_loss_path_.begin() + static_cast<std::ptrdiff_t>(std::min(m, train_loss_path_.size())));
  return BoostModel(cfg, features_, f0_, std::move(stages), std::move(path));
}

std::vector<std::string> default_features(const Dataset& ds, const std::string& outcome) {
  std::vector<std::string> out;
  for (const auto& name : ds.column_names()) {
    if (name == outcome) continue;
    if (ds.selection_flag() && *ds.selection_flag() == name) continue;
    out.push_back(name);
  }
  return out;
}

BoostModel fit_gbm(const Dataset& ds, const std::string& outcome, std::span<const double> weights,
                   const BoostConfig& config, const std::vector<std::string>& features) {
  config.validate();
  const std::size_t n = ds.n_rows();
  if (n == 0) throw FitError("cannot fit on an empty dataset");
  const auto& ycol = ds.column(outcome);
  if (!ycol.is_numeric()) throw SchemaError("outcome '" + outcome + "' must be numeric");
  const auto y = ycol.values();
  const Loss loss(config.loss);
  loss.check_outcomes(y);
  const auto w = resolve_weights(ds, weights);
  auto names = resolve_features(ds, outcome, features);

  const double f0 = loss.optimal_constant(y, w);
  std::vector<double> f(n, f0);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  std::vector<BoostStage> stages;
  std::vector<double> path;
  if (config.n_iter > 0) {
    const FeatureMatrix fm(ds, names);
    const auto bag_size = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(config.bag_fraction * static_cast<double>(n))), 1, n);
    std::vector<double> residual(n, 0.0);
    std::vector<double> by(bag_size), bf(bag_size), bh(bag_size), bw(bag_size);
    double current = mean_loss(loss, all, y, f, w);
    for (int m = 0; m < config.n_iter; ++m) {
      std::vector<std::size_t> bag;
      if (bag_size == n) {
        bag = all;
      } else {
        Rng rng(derive_seed(config.seed, "bag", static_cast<std::uint64_t>(m)));
        bag = sample_without_replacement(rng, n, bag_size);
      }
      for (std::size_t i : bag) residual[i] = loss.negative_gradient(y[i], f[i]);
      Tree tree = fit_tree(fm, bag, residual, w, TreeParams{config.depth, config.min_node});
      const auto h = tree.predict(ds);

      for (std::size_t j = 0; j < bag.size(); ++j) {
        by[j] = y[bag[j]];
        bf[j] = f[bag[j]];
        bh[j] = h[bag[j]];
        bw[j] = w[bag[j]];
      }
      double beta = loss.optimal_step(by, bf, bh, bw);
      // Guard the line search: the step must not raise the bag loss. In exact
      // arithmetic this only triggers for an overshooting Newton step.
      if (beta != 0.0 && config.shrinkage > 0.0) {
        const double before = bag_size == n ? current : mean_loss(loss, bag, y, f, w);
        int halvings = 0;
        while (beta != 0.0 && mean_loss(loss, bag, y, f, w, config.shrinkage * beta, h) > before) {
          beta = ++halvings > 30 ? 0.0 : beta / 2.0;
        }
      }
      const double step = config.shrinkage * beta;
      for (std::size_t i = 0; i < n; ++i) f[i] += step * h[i];
      current = mean_loss(loss, all, y, f, w);
      path.push_back(current);
      stages.push_back({beta, std::move(tree)});
    }
  }
  return BoostModel(config, std::move(names), f0, std::move(stages), std::move(path));
}

std::vector<double> predict_gbm(const BoostModel& model, const Dataset& rows) { return model.predict(rows); }

std::map<std::string, double> variable_importance(const BoostModel& model) { return model.importance(); }

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::auc:
      return "auc";
    case Metric::r2:
      return "r2";
    case Metric::mse:
      return "mse";
  }
  return "";
}

Metric parse_metric(std::string_view name) {
  if (name == "auc") return Metric::auc;
  if (name == "r2") return Metric::r2;
  if (name == "mse") return Metric::mse;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::vector<BoostConfig> make_grid(std::span<const int> n_iters, std::span<const int> depths,
                                   std::span<const double> shrinkages, const BoostConfig& base) {
  std::vector<BoostConfig> out;
  for (double s : shrinkages) {
    for (int d : depths) {
      for (int m : n_iters) {
        BoostConfig c = base;
        c.n_iter = m;
        c.depth = d;
        c.shrinkage = s;
        out.push_back(c);
      }
    }
  }
  return out;
}

TuneResult tune_grid(const Dataset& ds, const std::string& outcome, std::span<const double> weights,
                     const std::vector<BoostConfig>& grid, const Protocol& protocol, Metric metric,
                     const std::vector<std::string>& features, int threads) {
  if (grid.empty()) throw ConfigError("tuning grid is empty");
  for (const auto& c : grid) {
    c.validate();
    check_metric_loss(metric, c.loss);
  }
  const std::size_t n = ds.n_rows();
  const auto w = resolve_weights(ds, weights);
  const auto names = resolve_features(ds, outcome, features);

  // Folds: (train rows, validation rows).
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
  if (const auto* h = std::get_if<Holdout>(&protocol)) {
    folds.push_back(split_indices(n, h->train_fraction, h->seed));
  } else {
    const auto& kf = std::get<KFold>(protocol);
    if (kf.k < 2) throw ConfigError("k-fold needs k >= 2");
    if (n < static_cast<std::size_t>(kf.k)) throw SplitError("fewer rows than folds");
    Rng rng(derive_seed(kf.seed, "kfold"));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (int f = 0; f < kf.k; ++f) {
      std::vector<std::size_t> train, valid;
      for (std::size_t i = 0; i < n; ++i) {
        (static_cast<int>(i % static_cast<std::size_t>(kf.k)) == f ? valid : train).push_back(perm[i]);
      }
      std::sort(train.begin(), train.end());
      std::sort(valid.begin(), valid.end());
      folds.emplace_back(std::move(train), std::move(valid));
    }
  }

  // Group configs that differ only in n_iter.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    bool placed = false;
    for (auto& g : groups) {
      BoostConfig a = grid[g.front()];
      a.n_iter = grid[c].n_iter;
      if (a == grid[c]) {
        g.push_back(c);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({c});
  }

  const std::size_t n_cells = groups.size() * folds.size();
  std::vector<double> scores(grid.size() * folds.size(), 0.0);
  const auto y = ds.column(outcome).values();
  parallel_for(n_cells, threads, [&](std::size_t cell) {
    const auto& group = groups[cell / folds.size()];
    const std::size_t fold = cell % folds.size();
    const auto& [train_rows, valid_rows] = folds[fold];
    BoostConfig cfg = grid[group.front()];
    for (std::size_t c : group) cfg.n_iter = std::max(cfg.n_iter, grid[c].n_iter);

    std::vector<double> train_w(train_rows.size());
    for (std::size_t j = 0; j < train_rows.size(); ++j) train_w[j] = w[train_rows[j]];
    const auto model = fit_gbm(ds.take_rows(train_rows), outcome, train_w, cfg, names);
    const Dataset valid = ds.take_rows(valid_rows);
    std::vector<double> truth(valid_rows.size());
    for (std::size_t j = 0; j < valid_rows.size(); ++j) truth[j] = y[valid_rows[j]];

    std::set<std::size_t> wanted;
    for (std::size_t c : group) wanted.insert(static_cast<std::size_t>(grid[c].n_iter));
    std::map<std::size_t, double> at;
    model.staged_predict(valid, static_cast<std::size_t>(cfg.n_iter), [&](std::size_t m, std::span<const double> f) {
      if (wanted.count(m)) at[m] = score(metric, f, truth);
    });
    for (std::size_t c : group) scores[c * folds.size() + fold] = at.at(static_cast<std::size_t>(grid[c].n_iter));
  });

  TuneResult result;
  std::optional<double> best;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    CompensatedSum total;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const double s = scores[c * folds.size() + f];
      result.table.push_back({c, grid[c], static_cast<int>(f), metric, s});
      total += s;
    }
    const double mean = total.value() / static_cast<double>(folds.size());
    const bool better = !best || (higher_is_better(metric) ? mean > *best : mean < *best);
    if (better) {
      best = mean;
      result.best_index = c;
    }
  }
  result.best = grid[result.best_index];
  result.best_score = *best;
  return result;
}

std::string score_table_csv(const TuneResult& result) {
  std::ostringstream out;
  out << "config_index,n_iter,depth,min_node,shrinkage,bag_fraction,loss,fold,metric,score\n";
  for (const auto& r : result.table) {
    out << r.config_index << ',' << r.config.n_iter << ',' << r.config.depth << ',' << r.config.min_node << ','
        << format_double(r.config.shrinkage) << ',' << format_double(r.config.bag_fraction) << ','
        << to_string(r.config.loss) << ',' << r.fold << ',' << to_string(r.metric) << ',' << format_double(r.score)
        << '\n';
  }
  return out.str();
}

}  // namespace selboost
