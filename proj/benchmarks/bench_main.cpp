#include <benchmark/benchmark.h>

#include <cmath>

#include "selboost/boost.hpp"
#include "selboost/metrics.hpp"
#include "selboost/tree.hpp"
#include "support/oracles.hpp"

using namespace selboost;

namespace {

Dataset frame(std::size_t n) {
  Rng rng(1);
  std::vector<double> x1(n), x2(n), x3(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.normal();
    x2[i] = rng.normal();
    x3[i] = rng.normal();
    y[i] = (x1[i] > 0 ? 2.0 : 0.0) + x2[i] * x2[i] + 0.5 * rng.normal();
  }
  return oracle::numeric_frame({{"x1", x1}, {"x2", x2}, {"x3", x3}, {"y", y}}, "y");
}

void BM_FitTree(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ds = frame(n).without_columns(std::vector<std::string>{"y"});
  const auto y = frame(n).column("y").values();
  const std::vector<double> w(n, 1.0), t(y.begin(), y.end());
  for (auto _ : state) benchmark::DoNotOptimize(fit_tree(ds, t, w, 3, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FitTree)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_FitGbm(benchmark::State& state) {
  const auto ds = frame(static_cast<std::size_t>(state.range(0)));
  BoostConfig c;
  c.n_iter = 100;
  c.depth = 3;
  c.min_node = 10;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gbm(ds, "y", {}, c));
}
BENCHMARK(BM_FitGbm)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.normal();
    y[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(s, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
