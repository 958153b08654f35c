#include "selboost/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "selboost/error.hpp"

namespace selboost {

double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum s;
  for (double v : values) s += v;
  return s.value();
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw QuantileError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw QuantileError("quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) noexcept {
  if (z > -30.0) return std::log(normal_cdf(z));
  // Asymptotic Mills-ratio series: Phi(z) = phi(z)/t * (1 - 1/t^2 + 3/t^4 - ...), t = -z.
  const double t = -z;
  const double t2 = t * t;
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k < 12; ++k) {
    term *= -(2.0 * k - 1.0) / t2;
    series += term;
  }
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(t) + std::log(series);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace selboost
