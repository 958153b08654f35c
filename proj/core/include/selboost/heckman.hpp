#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "selboost/dataset.hpp"

namespace selboost {

/// Dense row-major matrix with column labels.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::string> names;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Matrix take_rows(std::span<const std::size_t> rows) const;
};

/// How to turn dataset columns into a numeric design: numeric columns as-is,
/// categorical columns as indicators for every level but the first.
struct DesignSpec {
  bool intercept = true;
  std::vector<std::string> columns;
  /// Levels per column; empty for numeric columns.
  std::vector<std::vector<std::string>> levels;
};

DesignSpec make_design_spec(const Dataset& ds, std::span<const std::string> columns, bool intercept = true);
/// Throws DataError when a numeric cell is missing. Unseen levels encode as the reference level.
Matrix build_design(const DesignSpec& spec, const Dataset& ds);

struct ProbitOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
};

struct ProbitFit {
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<std::string> names;
  double log_likelihood = 0.0;
  /// Log-likelihood after each accepted Newton step (starting point first).
  std::vector<double> log_likelihood_path;
  bool converged = false;
  int iterations = 0;
  /// Max-norm of the per-row mean score at the solution.
  double gradient_norm = 0.0;
};

/// Probit maximum likelihood by damped Newton with step halving; convergence
/// when the max-norm of the mean score is <= tolerance. The start is the
/// linear-probability fit scaled by 2.5 (intercept recentred at 0.5).
ProbitFit fit_probit(const Matrix& x, std::span<const double> s, const ProbitOptions& options = {});

/// phi(z) / Phi(z), stable deep into the lower tail.
double inverse_mills(double z);

struct HeckmanOptions {
  ProbitOptions probit;
  /// Condition number of the column-scaled stage-B design above which the fit is rejected.
  double max_condition = 1e10;
};

struct HeckmanFit {
  ProbitFit probit;
  std::vector<double> beta1;
  std::vector<std::string> x1_names;
  double beta_lambda = 0.0;
  /// Plain OLS standard errors for beta1 then beta_lambda.
  std::vector<double> std_errors;
  double residual_scale = 0.0;
  /// Inverse Mills ratio per selected row, in row order.
  std::vector<double> mills;
  std::vector<std::size_t> selected_rows;
  double condition_number = 0.0;
  /// True when every unit is selected and the constant Mills column was dropped.
  bool mills_dropped = false;
  /// mean(exp(residual)), for the optional smearing back-transform.
  double smearing_factor = 1.0;
  std::vector<std::string> warnings;
};

/// Stage A: probit of s on x2 over all rows. Stage B: OLS of y on [x1, mills]
/// over rows with s = 1. `y` is aligned with all rows; entries where s = 0 are ignored.
HeckmanFit fit_heckman_two_step(const Matrix& x1, const Matrix& x2, std::span<const double> y,
                                std::span<const double> s, const HeckmanOptions& options = {});

enum class HeckmanScale { linear, log_then_back };

/// x1' beta1 (no Mills term). log_then_back exponentiates, multiplied by the
/// smearing factor when `smearing` is set.
std::vector<double> predict_heckman(const HeckmanFit& fit, const Matrix& x1, HeckmanScale scale = HeckmanScale::linear,
                                    bool smearing = false);

/// Ordinary least squares via column-pivoted QR; throws CollinearityError on rank deficiency.
std::vector<double> ols(const Matrix& x, std::span<const double> y);

/// {probit: {coef, se, names, ll, iters, converged}, outcome: {coef, names,
///  beta_lambda, se, scale, condition_number}, warnings[]}
nlohmann::json heckman_report(const HeckmanFit& fit);

}  // namespace selboost
