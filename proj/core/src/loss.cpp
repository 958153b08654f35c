#include "selboost/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selboost/error.hpp"
#include "selboost/numeric.hpp"

namespace selboost {

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::squared_error ? "squared_error" : "logistic";
}

LossKind parse_loss(std::string_view name) {
  if (name == "squared_error" || name == "gaussian") return LossKind::squared_error;
  if (name == "logistic" || name == "bernoulli") return LossKind::logistic;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double Loss::evaluate(double y, double f) const noexcept {
  if (kind_ == LossKind::squared_error) {
    const double r = y - f;
    return r * r;
  }
  // log(1 + e^f) - y f
  const double softplus = f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
  return softplus - y * f;
}

double Loss::negative_gradient(double y, double f) const noexcept {
  return kind_ == LossKind::squared_error ? y - f : y - sigmoid(f);
}

double Loss::optimal_constant(std::span<const double> y, std::span<const double> w) const {
  CompensatedSum wy, ws;
  for (std::size_t i = 0; i < y.size(); ++i) {
    wy += w[i] * y[i];
    ws += w[i];
  }
  if (!(ws.value() > 0.0)) throw FitError("zero total weight");
  const double mean = wy.value() / ws.value();
  if (kind_ == LossKind::squared_error) {
    // A constant outcome must give back exactly that constant.
    if (!y.empty() && std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) return y[0];
    return mean;
  }
  if (!(mean > 0.0 && mean < 1.0)) throw DegenerateTargetError("logistic outcome has a single class");
  return std::log(mean / (1.0 - mean));
}

double Loss::optimal_step(std::span<const double> y, std::span<const double> f, std::span<const double> h,
                          std::span<const double> w) const {
  CompensatedSum num, den;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = negative_gradient(y[i], f[i]);
    num += w[i] * r * h[i];
    if (kind_ == LossKind::squared_error) {
      den += w[i] * h[i] * h[i];
    } else {
      const double p = sigmoid(f[i]);
      den += w[i] * p * (1.0 - p) * h[i] * h[i];
    }
  }
  const double d = den.value();
  if (!(d > 0.0) || !std::isfinite(d)) return 0.0;
  const double beta = num.value() / d;
  return std::isfinite(beta) ? beta : 0.0;
}

void Loss::check_outcomes(std::span<const double> y) const {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::isnan(y[i])) throw LossError("outcome is missing at row " + std::to_string(i));
    if (kind_ == LossKind::logistic && y[i] != 0.0 && y[i] != 1.0) {
      throw LossError("logistic loss needs 0/1 outcomes; row " + std::to_string(i) + " has " + std::to_string(y[i]));
    }
  }
}

}  // namespace selboost
