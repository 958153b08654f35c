#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "selboost/dataset.hpp"

namespace selboost {

enum class DgpKind { heckman_latent, indirect_covariate, nonlinear_regression };
enum class SelectionRule { constant, logistic, threshold };
enum class NonlinearShape { step, quadratic, interaction };

/// Bivariate-normal latent model: y* = x'beta1 + u1, z = x'beta2 + u2,
/// s = 1[z > 0], y observed when s = 1. beta1 and beta2 start with the
/// intercept; the outcome equation uses the first beta1.size()-1 covariates,
/// the selection equation the first beta2.size()-1. Covariates are N(0, 1).
struct HeckmanLatentParams {
  std::vector<double> beta1{1.0, 1.0};
  std::vector<double> beta2{0.0, 1.0, 1.0};
  double sigma1_sq = 1.0;
  double sigma12 = 0.5;
  double sigma2_sq = 1.0;
};

/// y = beta'(1, x) + noise * e, s ~ Bernoulli(pi(x)) independent of y given x.
struct IndirectCovariateParams {
  std::vector<double> beta{1.0, 1.0};
  double noise = 1.0;
  SelectionRule rule = SelectionRule::threshold;
  double pi_constant = 0.3;
  std::vector<double> logistic_coef{0.0, 1.0};  // intercept first
  double pi_high = 0.9;                          // threshold rule: x1 > cut
  double pi_low = 0.1;
  double cut = 0.0;
};

/// y = f(x) + noise * e over `n_features` N(0, 1) covariates, plus a noisy
/// proxy column (proxy = y + proxy_noise * e') for cutoff selection.
struct NonlinearParams {
  NonlinearShape shape = NonlinearShape::step;
  int n_features = 4;
  double noise = 1.0;
  double proxy_noise = 1.0;
};

struct SyntheticDgp {
  DgpKind kind = DgpKind::nonlinear_regression;
  HeckmanLatentParams heckman;
  IndirectCovariateParams indirect;
  NonlinearParams nonlinear;
  std::uint64_t seed = 0;

  /// Throws ConfigError on invalid parameters (e.g. a covariance that is not positive definite).
  void validate() const;
  int n_covariates() const;
  /// E[y | x] for a covariate row x1..xK.
  double conditional_mean(std::span<const double> x) const;
  /// P(s = 1 | x); indirect_covariate only.
  double inclusion_probability(std::span<const double> x) const;
  /// P(s = 1) integrated over the covariate distribution; indirect_covariate only.
  double marginal_inclusion_probability() const;
};

struct SyntheticSample {
  /// Covariates x1..xK, outcome "y" and, for kinds that select, flag "s".
  /// heckman_latent and indirect_covariate leave y missing where s = 0.
  Dataset data;
  std::vector<double> y_full;
  std::vector<double> conditional_mean;
  /// True P(s = 1 | x); empty unless indirect_covariate.
  std::vector<double> inclusion_probability;
};

SyntheticSample generate(const SyntheticDgp& dgp, std::size_t n);

/// data plus truth columns "y_full", "mean" and (when known) "pi".
Dataset with_truth_columns(const SyntheticSample& sample);

/// Flags units whose proxy exceeds its `percentile` quantile, together with a
/// uniform draw of round(random_fraction * n) units taken from all units.
Dataset cutoff_selection(const Dataset& ds, const std::string& proxy, double percentile, double random_fraction,
                         std::uint64_t seed, const std::string& flag_name = "s");

nlohmann::json dgp_to_json(const SyntheticDgp& dgp);
SyntheticDgp dgp_from_json(const nlohmann::json& j);

}  // namespace selboost
