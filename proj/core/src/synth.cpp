#include "selboost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "selboost/error.hpp"
#include "selboost/loss.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"

namespace selboost {
namespace {

double dot_with_intercept(std::span<const double> coef, std::span<const double> x) {
  double v = coef.empty() ? 0.0 : coef[0];
  for (std::size_t j = 1; j < coef.size(); ++j) v += coef[j] * x[j - 1];
  return v;
}

double nonlinear_f(NonlinearShape shape, std::span<const double> x) {
  switch (shape) {
    case NonlinearShape::step:
      return 2.0 * (x[0] > 0.0) + 2.0 * (x[1] > 0.5) + 1.5 * (x[0] > 1.0) - 1.0 * (x[1] < -1.0);
    case NonlinearShape::quadratic:
      return x[0] * x[0] + x[1] + 0.5 * x[2] * x[2];
    case NonlinearShape::interaction:
      return x[0] * x[1] + x[0] + x[2];
  }
  return 0.0;
}

std::string shape_name(NonlinearShape s) {
  switch (s) {
    case NonlinearShape::step:
      return "step";
    case NonlinearShape::quadratic:
      return "quadratic";
    case NonlinearShape::interaction:
      return "interaction";
  }
  return "";
}

std::string rule_name(SelectionRule r) {
  switch (r) {
    case SelectionRule::constant:
      return "constant";
    case SelectionRule::logistic:
      return "logistic";
    case SelectionRule::threshold:
      return "threshold";
  }
  return "";
}

std::string kind_name(DgpKind k) {
  switch (k) {
    case DgpKind::heckman_latent:
      return "heckman_latent";
    case DgpKind::indirect_covariate:
      return "indirect_covariate";
    case DgpKind::nonlinear_regression:
      return "nonlinear_regression";
  }
  return "";
}

template <typename E>
E parse_enum(const std::string& name, std::initializer_list<std::pair<const char*, E>> options, const char* what) {
  for (const auto& [label, value] : options) {
    if (name == label) return value;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

bool is_probability(double p) { return p > 0.0 && p < 1.0; }

}  // namespace

void SyntheticDgp::validate() const {
  switch (kind) {
    case DgpKind::heckman_latent: {
      const auto& h = heckman;
      if (h.beta1.empty() || h.beta2.empty()) throw ConfigError("heckman_latent: beta1 and beta2 need an intercept");
      if (!(h.sigma1_sq > 0.0 && h.sigma2_sq > 0.0 && h.sigma1_sq * h.sigma2_sq > h.sigma12 * h.sigma12)) {
        throw ConfigError("heckman_latent: error covariance is not positive definite");
      }
      break;
    }
    case DgpKind::indirect_covariate: {
      const auto& p = indirect;
      if (p.beta.empty()) throw ConfigError("indirect_covariate: beta needs an intercept");
      if (!(p.noise >= 0.0)) throw ConfigError("indirect_covariate: noise must be >= 0");
      if (p.rule == SelectionRule::constant && !is_probability(p.pi_constant)) {
        throw ConfigError("indirect_covariate: pi_constant must lie in (0, 1)");
      }
      if (p.rule == SelectionRule::threshold && !(is_probability(p.pi_high) && is_probability(p.pi_low))) {
        throw ConfigError("indirect_covariate: pi_high and pi_low must lie in (0, 1)");
      }
      if (p.rule == SelectionRule::logistic && p.logistic_coef.empty()) {
        throw ConfigError("indirect_covariate: logistic_coef needs an intercept");
      }
      break;
    }
    case DgpKind::nonlinear_regression:
      if (nonlinear.n_features < 3) throw ConfigError("nonlinear_regression: n_features must be >= 3");
      if (!(nonlinear.noise >= 0.0 && nonlinear.proxy_noise >= 0.0)) {
        throw ConfigError("nonlinear_regression: noise scales must be >= 0");
      }
      break;
  }
}

int SyntheticDgp::n_covariates() const {
  switch (kind) {
    case DgpKind::heckman_latent:
      return static_cast<int>(std::max(heckman.beta1.size(), heckman.beta2.size())) - 1;
    case DgpKind::indirect_covariate: {
      std::size_t k = std::max<std::size_t>(indirect.beta.size() - 1, 1);
      if (indirect.rule == SelectionRule::logistic) k = std::max(k, indirect.logistic_coef.size() - 1);
      return static_cast<int>(k);
    }
    case DgpKind::nonlinear_regression:
      return nonlinear.n_features;
  }
  return 0;
}

double SyntheticDgp::conditional_mean(std::span<const double> x) const {
  switch (kind) {
    case DgpKind::heckman_latent:
      return dot_with_intercept(heckman.beta1, x);
    case DgpKind::indirect_covariate:
      return dot_with_intercept(indirect.beta, x);
    case DgpKind::nonlinear_regression:
      return nonlinear_f(nonlinear.shape, x);
  }
  return 0.0;
}

double SyntheticDgp::inclusion_probability(std::span<const double> x) const {
  if (kind != DgpKind::indirect_covariate) throw ConfigError("inclusion probability is known only for indirect_covariate");
  switch (indirect.rule) {
    case SelectionRule::constant:
      return indirect.pi_constant;
    case SelectionRule::logistic:
      return sigmoid(dot_with_intercept(indirect.logistic_coef, x));
    case SelectionRule::threshold:
      return x[0] > indirect.cut ? indirect.pi_high : indirect.pi_low;
  }
  return 0.0;
}

double SyntheticDgp::marginal_inclusion_probability() const {
  if (kind != DgpKind::indirect_covariate) throw ConfigError("inclusion probability is known only for indirect_covariate");
  switch (indirect.rule) {
    case SelectionRule::constant:
      return indirect.pi_constant;
    case SelectionRule::threshold: {
      const double below = normal_cdf(indirect.cut);
      return indirect.pi_low * below + indirect.pi_high * (1.0 - below);
    }
    case SelectionRule::logistic: {
      // The linear index is N(a0, |a|^2); integrate the sigmoid by Simpson's rule.
      const auto& c = indirect.logistic_coef;
      double var = 0.0;
      for (std::size_t j = 1; j < c.size(); ++j) var += c[j] * c[j];
      const double sd = std::sqrt(var);
      if (sd == 0.0) return sigmoid(c[0]);
      const int steps = 4000;
      const double lo = -12.0, hi = 12.0, step = (hi - lo) / steps;
      CompensatedSum acc;
      for (int k = 0; k <= steps; ++k) {
        const double z = lo + step * k;
        const double wgt = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        acc += wgt * normal_pdf(z) * sigmoid(c[0] + sd * z);
      }
      return acc.value() * step / 3.0;
    }
  }
  return 0.0;
}

SyntheticSample generate(const SyntheticDgp& dgp, std::size_t n) {
  dgp.validate();
  if (n == 0) throw ConfigError("generate: n must be >= 1");
  const auto k = static_cast<std::size_t>(dgp.n_covariates());
  Rng rng(derive_seed(dgp.seed, "generate", static_cast<std::uint64_t>(dgp.kind)));

  std::vector<std::vector<double>> x(k, std::vector<double>(n));
  SyntheticSample out;
  out.y_full.resize(n);
  out.conditional_mean.resize(n);
  std::vector<double> y(n), flag, proxy;
  std::vector<double> row(k);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  if (dgp.kind == DgpKind::heckman_latent) flag.resize(n);
  if (dgp.kind == DgpKind::indirect_covariate) {
    flag.resize(n);
    out.inclusion_probability.resize(n);
  }
  if (dgp.kind == DgpKind::nonlinear_regression) proxy.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) row[j] = x[j][i] = rng.normal();
    const double mean = dgp.conditional_mean(row);
    out.conditional_mean[i] = mean;
    switch (dgp.kind) {
      case DgpKind::heckman_latent: {
        const auto& h = dgp.heckman;
        const double sigma2 = std::sqrt(h.sigma2_sq);
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        const double u2 = sigma2 * e2;
        const double u1 = (h.sigma12 / sigma2) * e2 + std::sqrt(h.sigma1_sq - h.sigma12 * h.sigma12 / h.sigma2_sq) * e1;
        const double z = dot_with_intercept(h.beta2, row) + u2;
        out.y_full[i] = mean + u1;
        flag[i] = z > 0.0 ? 1.0 : 0.0;
        y[i] = flag[i] == 1.0 ? out.y_full[i] : nan;
        break;
      }
      case DgpKind::indirect_covariate: {
        out.y_full[i] = mean + dgp.indirect.noise * rng.normal();
        const double pi = dgp.inclusion_probability(row);
        out.inclusion_probability[i] = pi;
        flag[i] = rng.bernoulli(pi) ? 1.0 : 0.0;
        y[i] = flag[i] == 1.0 ? out.y_full[i] : nan;
        break;
      }
      case DgpKind::nonlinear_regression:
        out.y_full[i] = mean + dgp.nonlinear.noise * rng.normal();
        proxy[i] = out.y_full[i] + dgp.nonlinear.proxy_noise * rng.normal();
        y[i] = out.y_full[i];
        break;
    }
  }

  std::vector<Column> cols;
  for (std::size_t j = 0; j < k; ++j) cols.push_back(Column::numeric("x" + std::to_string(j + 1), std::move(x[j])));
  if (!proxy.empty()) cols.push_back(Column::numeric("proxy", std::move(proxy)));
  cols.push_back(Column::numeric("y", std::move(y)));
  std::optional<std::string> flag_name;
  if (!flag.empty()) {
    cols.push_back(Column::numeric("s", std::move(flag)));
    flag_name = "s";
  }
  out.data = Dataset(std::move(cols), "y", flag_name);
  return out;
}

Dataset with_truth_columns(const SyntheticSample& sample) {
  Dataset ds = sample.data.with_column(Column::numeric("y_full", sample.y_full))
                   .with_column(Column::numeric("mean", sample.conditional_mean));
  if (!sample.inclusion_probability.empty()) ds = ds.with_column(Column::numeric("pi", sample.inclusion_probability));
  return ds;
}

Dataset cutoff_selection(const Dataset& ds, const std::string& proxy, double percentile, double random_fraction,
                         std::uint64_t seed, const std::string& flag_name) {
  if (!(percentile > 0.0 && percentile < 1.0)) throw ConfigError("cutoff_selection: percentile must lie in (0, 1)");
  if (!(random_fraction >= 0.0 && random_fraction <= 1.0)) {
    throw ConfigError("cutoff_selection: random_fraction must lie in [0, 1]");
  }
  const auto& col = ds.column(proxy);
  if (!col.is_numeric()) throw SchemaError("cutoff_selection: proxy '" + proxy + "' must be numeric");
  if (col.missing_count() > 0) throw PreconditionError("cutoff_selection: proxy '" + proxy + "' has missing values");
  const auto values = col.values();
  const double cut = quantile(values, percentile);
  const std::size_t n = ds.n_rows();
  std::vector<double> flag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) flag[i] = values[i] > cut ? 1.0 : 0.0;
  const auto n_random = static_cast<std::size_t>(std::llround(random_fraction * static_cast<double>(n)));
  Rng rng(derive_seed(seed, "cutoff_random"));
  for (std::size_t i : sample_without_replacement(rng, n, std::min(n_random, n))) flag[i] = 1.0;
  return ds.with_column(Column::numeric(flag_name, std::move(flag))).with_selection_flag(flag_name);
}

nlohmann::json dgp_to_json(const SyntheticDgp& dgp) {
  nlohmann::json j;
  j["kind"] = kind_name(dgp.kind);
  j["seed"] = dgp.seed;
  auto& p = j["parameters"];
  switch (dgp.kind) {
    case DgpKind::heckman_latent:
      p = {{"beta1", dgp.heckman.beta1},         {"beta2", dgp.heckman.beta2},
           {"sigma1_sq", dgp.heckman.sigma1_sq}, {"sigma12", dgp.heckman.sigma12},
           {"sigma2_sq", dgp.heckman.sigma2_sq}};
      break;
    case DgpKind::indirect_covariate:
      p = {{"beta", dgp.indirect.beta},
           {"noise", dgp.indirect.noise},
           {"selection", rule_name(dgp.indirect.rule)},
           {"pi_constant", dgp.indirect.pi_constant},
           {"logistic_coef", dgp.indirect.logistic_coef},
           {"pi_high", dgp.indirect.pi_high},
           {"pi_low", dgp.indirect.pi_low},
           {"cut", dgp.indirect.cut}};
      break;
    case DgpKind::nonlinear_regression:
      p = {{"shape", shape_name(dgp.nonlinear.shape)},
           {"n_features", dgp.nonlinear.n_features},
           {"noise", dgp.nonlinear.noise},
           {"proxy_noise", dgp.nonlinear.proxy_noise}};
      break;
  }
  return j;
}

SyntheticDgp dgp_from_json(const nlohmann::json& j) {
  try {
    SyntheticDgp d;
    d.kind = parse_enum<DgpKind>(j.at("kind").get<std::string>(),
                                 {{"heckman_latent", DgpKind::heckman_latent},
                                  {"indirect_covariate", DgpKind::indirect_covariate},
                                  {"nonlinear_regression", DgpKind::nonlinear_regression}},
                                 "dgp kind");
    d.seed = j.value("seed", std::uint64_t{0});
    const auto p = j.value("parameters", nlohmann::json::object());
    switch (d.kind) {
      case DgpKind::heckman_latent: {
        auto& h = d.heckman;
        h.beta1 = p.value("beta1", h.beta1);
        h.beta2 = p.value("beta2", h.beta2);
        h.sigma1_sq = p.value("sigma1_sq", h.sigma1_sq);
        h.sigma12 = p.value("sigma12", h.sigma12);
        h.sigma2_sq = p.value("sigma2_sq", h.sigma2_sq);
        break;
      }
      case DgpKind::indirect_covariate: {
        auto& c = d.indirect;
        c.beta = p.value("beta", c.beta);
        c.noise = p.value("noise", c.noise);
        c.rule = parse_enum<SelectionRule>(p.value("selection", rule_name(c.rule)),
                                           {{"constant", SelectionRule::constant},
                                            {"logistic", SelectionRule::logistic},
                                            {"threshold", SelectionRule::threshold}},
                                           "selection rule");
        c.pi_constant = p.value("pi_constant", c.pi_constant);
        c.logistic_coef = p.value("logistic_coef", c.logistic_coef);
        c.pi_high = p.value("pi_high", c.pi_high);
        c.pi_low = p.value("pi_low", c.pi_low);
        c.cut = p.value("cut", c.cut);
        break;
      }
      case DgpKind::nonlinear_regression: {
        auto& c = d.nonlinear;
        c.shape = parse_enum<NonlinearShape>(p.value("shape", shape_name(c.shape)),
                                             {{"step", NonlinearShape::step},
                                              {"quadratic", NonlinearShape::quadratic},
                                              {"interaction", NonlinearShape::interaction}},
                                             "nonlinear shape");
        c.n_features = p.value("n_features", c.n_features);
        c.noise = p.value("noise", c.noise);
        c.proxy_noise = p.value("proxy_noise", c.proxy_noise);
        break;
      }
    }
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid dgp specification: ") + e.what());
  }
}

}  // namespace selboost
