#include "selboost/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "selboost/error.hpp"
#include "selboost/metrics.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"

namespace selboost {
namespace {

constexpr const char* kPiColumn = "pi_hat";

const std::string& flag_name(const Dataset& ds) {
  if (!ds.selection_flag()) throw SchemaError("dataset has no selection flag");
  return *ds.selection_flag();
}

void check_not_degenerate(std::span<const double> flags) {
  const auto selected = std::count(flags.begin(), flags.end(), 1.0);
  if (selected == 0) throw DegenerateTargetError("no rows are selected");
  if (static_cast<std::size_t>(selected) == flags.size()) throw DegenerateTargetError("every row is selected");
}

BoostConfig as_classifier(BoostConfig c) {
  if (c.loss != LossKind::logistic) throw ConfigError("step-1 configuration must use logistic loss");
  return c;
}

std::vector<double> clip(std::vector<double> p, double floor) {
  for (double& v : p) v = std::max(v, floor);
  return p;
}

double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s += x;
  return s.value() / static_cast<double>(v.size());
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  CompensatedSum q;
  for (double x : v) q += (x - m) * (x - m);
  return std::sqrt(q.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

TwoStepModel::TwoStepModel(BoostModel step1, BoostModel step2, std::vector<double> pi_hat, std::vector<double> nu,
                           std::vector<std::size_t> selected_rows, TwoStepOptions options)
    : step1_(std::move(step1)),
      step2_(std::move(step2)),
      pi_hat_(std::move(pi_hat)),
      nu_(std::move(nu)),
      selected_rows_(std::move(selected_rows)),
      options_(std::move(options)) {}

std::vector<double> TwoStepModel::inclusion_probabilities(const Dataset& rows) const {
  return clip(step1_.predict_proba(rows), options_.clip_floor);
}

std::vector<double> TwoStepModel::predict(const Dataset& rows) const {
  if (!options_.pi_as_covariate) return step2_.predict(rows);
  return step2_.predict(rows.with_column(Column::numeric(kPiColumn, inclusion_probabilities(rows))));
}

std::vector<std::string> selection_features(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& name : ds.column_names()) {
    if (ds.outcome() && *ds.outcome() == name) continue;
    if (ds.selection_flag() && *ds.selection_flag() == name) continue;
    out.push_back(name);
  }
  return out;
}

BoostModel fit_inclusion_model(const Dataset& ds, const BoostConfig& config, const std::vector<std::string>& features) {
  const auto& flag = flag_name(ds);
  check_not_degenerate(ds.column(flag).values());
  const auto names = features.empty() ? selection_features(ds) : features;
  return fit_gbm(ds, flag, {}, as_classifier(config), names);
}

std::vector<double> estimate_inclusion_probabilities(const Dataset& ds, const BoostConfig& config, double clip_floor,
                                                     const std::vector<std::string>& features) {
  if (!(clip_floor > 0.0 && clip_floor < 1.0)) throw ConfigError("clip_floor must lie in (0, 1)");
  return clip(fit_inclusion_model(ds, config, features).predict_proba(ds), clip_floor);
}

std::vector<double> inverse_weights(std::span<const double> pi_hat, std::span<const double> selected,
                                    double clip_floor) {
  if (!(clip_floor > 0.0)) throw ConfigError("clip_floor must be positive");
  if (pi_hat.size() != selected.size()) throw AlignmentError("inverse_weights: pi_hat and selected differ in length");
  std::vector<double> nu;
  for (std::size_t i = 0; i < pi_hat.size(); ++i) {
    if (selected[i] == 1.0) nu.push_back(1.0 / std::max(pi_hat[i], clip_floor));
  }
  if (nu.empty()) return nu;
  const double m = mean_of(nu);
  for (double& v : nu) v /= m;
  return nu;
}

TwoStepModel fit_two_step(const Dataset& ds, const std::string& outcome, const BoostConfig& step1_config,
                          const BoostConfig& step2_config, const TwoStepOptions& options) {
  if (!(options.clip_floor > 0.0 && options.clip_floor < 1.0)) throw ConfigError("clip_floor must lie in (0, 1)");
  const auto& flag = flag_name(ds);
  const auto flags = ds.column(flag).values();
  check_not_degenerate(flags);
  auto features = options.features.empty() ? selection_features(ds) : options.features;
  features.erase(std::remove(features.begin(), features.end(), outcome), features.end());

  BoostModel step1 = fit_inclusion_model(ds, step1_config, features);
  std::vector<double> pi_hat;
  if (!options.cross_fit) {
    pi_hat = clip(step1.predict_proba(ds), options.clip_floor);
  } else {
    if (options.cross_fit_folds < 2) throw ConfigError("cross_fit_folds must be >= 2");
    const std::size_t n = ds.n_rows();
    const auto k = static_cast<std::size_t>(options.cross_fit_folds);
    Rng rng(derive_seed(step1_config.seed, "crossfit"));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    pi_hat.assign(n, 0.0);
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train, held;
      for (std::size_t i = 0; i < n; ++i) (i % k == f ? held : train).push_back(perm[i]);
      std::sort(train.begin(), train.end());
      std::sort(held.begin(), held.end());
      const auto part = fit_inclusion_model(ds.take_rows(train), step1_config, features);
      const auto p = part.predict_proba(ds.take_rows(held));
      for (std::size_t j = 0; j < held.size(); ++j) pi_hat[held[j]] = std::max(p[j], options.clip_floor);
    }
  }

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == 1.0) selected.push_back(i);
  }
  if (selected.size() < static_cast<std::size_t>(step2_config.min_node)) {
    throw FitError("only " + std::to_string(selected.size()) + " selected rows, fewer than step-2 min_node " +
                   std::to_string(step2_config.min_node));
  }
  auto nu = inverse_weights(pi_hat, flags, options.clip_floor);

  Dataset train = ds;
  auto step2_features = features;
  if (options.pi_as_covariate) {
    train = train.with_column(Column::numeric(kPiColumn, pi_hat));
    step2_features.push_back(kPiColumn);
  }
  train = train.take_rows(selected);
  BoostConfig reg = step2_config;
  if (reg.loss != LossKind::squared_error) throw ConfigError("step-2 configuration must use squared_error loss");
  BoostModel step2 = fit_gbm(train, outcome, nu, reg, step2_features);
  return TwoStepModel(std::move(step1), std::move(step2), std::move(pi_hat), std::move(nu), std::move(selected),
                      options);
}

BiasCheckReport check_bias_correction(const SyntheticDgp& dgp, const Predictor& predictor, const Loss& loss,
                                      std::size_t n, std::size_t replications, std::uint64_t seed, int threads) {
  if (dgp.kind != DgpKind::indirect_covariate) {
    throw ConfigError("check_bias_correction needs a dgp with known selection probabilities");
  }
  if (replications < 2 || n < 1) throw ConfigError("check_bias_correction: need n >= 1 and >= 2 replications");
  const double p_selected = dgp.marginal_inclusion_probability();
  std::vector<double> pop(replications), weighted(replications), unweighted(replications);
  std::vector<char> empty(replications, 0);

  parallel_for(replications, threads, [&](std::size_t r) {
    SyntheticDgp d = dgp;
    d.seed = derive_seed(seed, "replication", r);
    const auto sample = generate(d, n);
    const auto pred = predictor(sample.data);
    if (pred.size() != n) throw AlignmentError("predictor returned the wrong number of predictions");
    const auto flags = sample.data.flag_values();
    CompensatedSum all, wsum, usum;
    std::size_t n_sel = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double l = loss.evaluate(sample.y_full[i], pred[i]);
      all += l;
      if (flags[i] != 1) continue;
      const double pi = sample.inclusion_probability[i];
      if (!(pi > 0.0)) throw PreconditionError("true selection probability is 0 on the support");
      wsum += l * (p_selected / pi);
      usum += l;
      ++n_sel;
    }
    pop[r] = all.value() / static_cast<double>(n);
    if (n_sel == 0) {
      empty[r] = 1;
      return;
    }
    weighted[r] = wsum.value() / static_cast<double>(n_sel);
    unweighted[r] = usum.value() / static_cast<double>(n_sel);
  });

  BiasCheckReport rep;
  rep.n = n;
  rep.replications = replications;
  for (std::size_t r = 0; r < replications; ++r) {
    if (empty[r]) continue;
    rep.weighted_by_replication.push_back(weighted[r]);
    rep.unweighted_by_replication.push_back(unweighted[r]);
  }
  if (rep.weighted_by_replication.size() < 2) throw PreconditionError("too few replications selected any unit");
  rep.population_loss = mean_of(pop);
  rep.population_se = standard_error(pop);
  rep.weighted_sample_loss = mean_of(rep.weighted_by_replication);
  rep.weighted_se = standard_error(rep.weighted_by_replication);
  rep.unweighted_sample_loss = mean_of(rep.unweighted_by_replication);
  rep.unweighted_se = standard_error(rep.unweighted_by_replication);
  return rep;
}

nlohmann::json pipeline_report(const TwoStepModel& model, const Dataset& train, const std::string& outcome,
                               const std::optional<Dataset>& eval) {
  nlohmann::json j;
  const auto flags = train.column(flag_name(train)).values();
  j["step1"]["auc"] = auc(model.pi_hat(), flags);
  j["step1"]["importance"] = model.step1().importance();

  const auto& nu = model.nu();
  std::size_t clipped = 0;
  for (std::size_t i : model.selected_rows()) {
    if (model.pi_hat()[i] <= model.clip_floor()) ++clipped;
  }
  j["weights"] = {{"min", *std::min_element(nu.begin(), nu.end())},
                  {"max", *std::max_element(nu.begin(), nu.end())},
                  {"mean", mean_of(nu)},
                  {"clipped_count", clipped}};

  const Dataset scored = eval ? *eval : train.take_rows(model.selected_rows());
  const auto truth = scored.column(outcome).values();
  const auto pred = model.predict(scored);
  // R2 is undefined for a constant outcome; report null rather than fail.
  auto r2_or_null = [&](R2Variant v) -> nlohmann::json {
    try {
      return r2(pred, truth, v);
    } catch (const MetricError&) {
      return nullptr;
    }
  };
  j["step2"] = {{"n", scored.n_rows()},
                {"mse", mse(pred, truth)},
                {"r2_determination", r2_or_null(R2Variant::determination)},
                {"r2_relative_mse", r2_or_null(R2Variant::relative_mse)},
                {"importance", model.step2().importance()}};
  return j;
}

}  // namespace selboost
