#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "selboost/error.hpp"
#include "selboost/uncertainty.hpp"
#include "support/oracles.hpp"

using namespace selboost;

namespace {

FitPredictFn mean_predictor() {
  return [](const Dataset& train, const Dataset& score, std::uint64_t) {
    const auto y = train.column("y").values();
    double s = 0.0;
    for (double v : y) s += v;
    return std::vector<double>(score.n_rows(), s / static_cast<double>(y.size()));
  };
}

BootstrapEnsemble ensemble_of(std::vector<std::vector<double>> preds) {
  BootstrapEnsemble e;
  e.replicates = preds.size();
  e.predictions = std::move(preds);
  for (std::size_t i = 0; i < e.predictions[0].size(); ++i) e.unit_ids.push_back(static_cast<std::int64_t>(i));
  return e;
}

}  // namespace

TEST(Bootstrap, ConstantZeroPredictor) {
  const auto train = oracle::numeric_frame({{"y", {1, 2, 3}}});
  const auto ens = bootstrap_fit_predict(
      train, train, [](const Dataset&, const Dataset& s, std::uint64_t) { return std::vector<double>(s.n_rows(), 0.0); },
      5, 1);
  ASSERT_EQ(ens.predictions.size(), 5u);
  for (const auto& row : ens.predictions)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  const auto train = oracle::numeric_frame({{"y", {1, 5, 2, 8, 3}}});
  const auto a = bootstrap_fit_predict(train, train, mean_predictor(), 2, 7);
  const auto b = bootstrap_fit_predict(train, train, mean_predictor(), 2, 7);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.replicate_seeds, b.replicate_seeds);
  const auto c = bootstrap_fit_predict(train, train, mean_predictor(), 40, 7, 1);
  const auto d = bootstrap_fit_predict(train, train, mean_predictor(), 40, 7, 4);
  EXPECT_EQ(c.predictions, d.predictions);
}

TEST(Bootstrap, TwoPointResampleFrequencies) {
  // Four equally likely resamples of {0, 10}: means 0, 5, 5, 10.
  const auto train = oracle::numeric_frame({{"y", {0, 10}}});
  const auto score = oracle::numeric_frame({{"y", {0}}});
  const auto ens = bootstrap_fit_predict(train, score, mean_predictor(), 10000, 3);
  double c0 = 0, c5 = 0, c10 = 0;
  for (const auto& row : ens.predictions) {
    const double v = row[0];
    ASSERT_TRUE(v == 0.0 || v == 5.0 || v == 10.0);
    (v == 0.0 ? c0 : v == 5.0 ? c5 : c10) += 1;
  }
  const double sd = std::sqrt(0.25 * 0.75 / 10000.0);
  EXPECT_NEAR(c0 / 10000.0, 0.25, 4 * sd);
  EXPECT_NEAR(c5 / 10000.0, 0.5, 4 * std::sqrt(0.25 / 10000.0));
  EXPECT_NEAR(c10 / 10000.0, 0.25, 4 * sd);
}

TEST(Bootstrap, ResamplesAtFullSize) {
  const auto train = oracle::numeric_frame({{"y", {1, 2, 3, 4, 5, 6, 7}}});
  bootstrap_fit_predict(
      train, train,
      [](const Dataset& t, const Dataset& s, std::uint64_t) {
        EXPECT_EQ(t.n_rows(), 7u);
        return std::vector<double>(s.n_rows(), 0.0);
      },
      3, 2);
}

TEST(Bootstrap, FailureNamesReplicate) {
  const auto train = oracle::numeric_frame({{"y", {1, 2}}});
  int calls = 0;
  try {
    bootstrap_fit_predict(
        train, train,
        [&](const Dataset&, const Dataset& s, std::uint64_t) -> std::vector<double> {
          if (calls++ == 2) throw FitError("boom");
          return std::vector<double>(s.n_rows(), 0.0);
        },
        4, 2);
    FAIL();
  } catch (const FitError& e) {
    EXPECT_NE(std::string(e.what()).find("replicate 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(bootstrap_fit_predict(train, train, mean_predictor(), 1, 0), ConfigError);
}

TEST(Interval, QuantileCases) {
  std::vector<std::vector<double>> preds;
  for (int j = 1; j <= 100; ++j) preds.push_back({static_cast<double>(j), 4.0});
  const auto ens = ensemble_of(preds);
  const auto iv = interval(ens, 0.05, 0.95);
  EXPECT_NEAR(iv[0].first, 5.95, 1e-12);
  EXPECT_NEAR(iv[0].second, 95.05, 1e-12);
  EXPECT_EQ(iv[1], (Interval{4.0, 4.0}));
  const auto full = interval(ens, 0.0, 1.0);
  EXPECT_EQ(full[0], (Interval{1.0, 100.0}));
  EXPECT_THROW(interval(ens, 0.9, 0.1), ConfigError);
}

TEST(Interval, WideningNeverShrinks) {
  Rng rng(4);
  std::vector<std::vector<double>> preds(50, std::vector<double>(20));
  for (auto& row : preds)
    for (double& v : row) v = rng.normal();
  const auto ens = ensemble_of(preds);
  const auto narrow = interval(ens, 0.2, 0.8);
  const auto wide = interval(ens, 0.05, 0.95);
  for (std::size_t i = 0; i < narrow.size(); ++i) {
    EXPECT_LE(wide[i].first, narrow[i].first);
    EXPECT_GE(wide[i].second, narrow[i].second);
  }
}

TEST(Coverage, Cases) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<Interval> all{{-inf, inf}, {-inf, inf}};
  EXPECT_EQ(coverage(all, std::vector<double>{1.0, -3.0}), 1.0);
  const std::vector<Interval> point{{2.0, 2.0}, {2.0, 2.0}};
  EXPECT_EQ(coverage(point, std::vector<double>{1.0, 3.0}), 0.0);
  const std::vector<Interval> hand{{0, 1}, {0, 1}, {2, 3}};
  EXPECT_DOUBLE_EQ(coverage(hand, std::vector<double>{0.5, 1.5, 2.5}), 2.0 / 3.0);
  EXPECT_THROW(coverage(hand, std::vector<double>{0.5}), AlignmentError);
}

TEST(Export, CsvShapes) {
  const auto ens = ensemble_of({{1.0, 2.0}, {3.0, 4.0}});
  const auto csv = ensemble_csv(ens);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "unit_id,replicate,prediction");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const std::vector<Interval> iv{{0.5, 1.5}};
  const std::vector<std::int64_t> ids{9};
  EXPECT_EQ(interval_csv(ids, iv), "unit_id,lo,hi\n9,0.5,1.5\n");
}
