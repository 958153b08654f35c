#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace selboost {

/// Neumaier-compensated accumulator; population-level sums of monetary
/// amounts reach 1e12 and lose cents with naive summation.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;

/// Quantile of already-sorted data by linear interpolation between order
/// statistics: position h = (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double p);

/// Sorts a copy, then quantile_sorted.
double quantile(std::span<const double> values, double p);

double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;
/// ln Phi(z), accurate deep into the lower tail.
double log_normal_cdf(double z) noexcept;

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically; callers write results into slot i so the outcome does
/// not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace selboost
