#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace selboost {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for a named sub-stream: derive_seed(master, "bag", m) is stable across
/// platforms and independent of the order in which sub-streams are consumed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component, std::uint64_t index = 0) noexcept;

/// Counter-based generator: the i-th draw is mix64(key + i * golden), so the
/// stream is a pure function of (key, i). Normal variates use the Box-Muller
/// transform on two consecutive uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept {
    return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// k distinct indices drawn uniformly from [0, n), returned in ascending order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

/// n indices drawn uniformly with replacement from [0, n_source).
std::vector<std::size_t> sample_with_replacement(Rng& rng, std::size_t n_source, std::size_t n);

}  // namespace selboost
