#pragma once

#include <span>
#include <string_view>

namespace selboost {

enum class LossKind { squared_error, logistic };

std::string_view to_string(LossKind kind) noexcept;
/// Accepts "squared_error" / "gaussian" and "logistic" / "bernoulli".
LossKind parse_loss(std::string_view name);

/// Loss L(y, f). For logistic loss y is 0/1 and f is on the log-odds scale.
class Loss {
 public:
  explicit Loss(LossKind kind) noexcept : kind_(kind) {}

  LossKind kind() const noexcept { return kind_; }

  double evaluate(double y, double f) const noexcept;
  /// Pseudo-residual -dL/df.
  double negative_gradient(double y, double f) const noexcept;
  /// argmin_c sum w L(y, c): weighted mean, or log-odds of the weighted mean.
  double optimal_constant(std::span<const double> y, std::span<const double> w) const;
  /// Step beta for F + beta * h. Closed form for squared error; one Newton
  /// step from beta = 0 for logistic loss. Zero when h carries no signal.
  double optimal_step(std::span<const double> y, std::span<const double> f, std::span<const double> h,
                      std::span<const double> w) const;
  /// Throws LossError when an outcome is outside the loss's domain.
  void check_outcomes(std::span<const double> y) const;

 private:
  LossKind kind_;
};

inline double sigmoid(double f) noexcept;

}  // namespace selboost

#include <cmath>

inline double selboost::sigmoid(double f) noexcept {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}
