#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "selboost/error.hpp"
#include "selboost/heckman.hpp"
#include "selboost/numeric.hpp"
#include "selboost/synth.hpp"
#include "support/oracles.hpp"

using namespace selboost;

namespace {

Matrix design(const Dataset& ds, std::vector<std::string> cols) {
  return build_design(make_design_spec(ds, cols), ds);
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

SyntheticSample latent_sample(double sigma12, std::size_t n, std::uint64_t seed) {
  SyntheticDgp dgp;
  dgp.kind = DgpKind::heckman_latent;
  dgp.heckman.sigma12 = sigma12;
  dgp.seed = seed;
  return generate(dgp, n);
}

HeckmanFit fit_latent(const SyntheticSample& sample) {
  const auto& d = sample.data;
  return fit_heckman_two_step(design(d, {"x1"}), design(d, {"x1", "x2"}), d.column("y").values(),
                              d.column("s").values());
}

}  // namespace

TEST(Mills, HighPrecisionValues) {
  // phi(z) / Phi(z) evaluated with 50-digit arithmetic.
  EXPECT_NEAR(inverse_mills(0.0), 0.7978845608028653558798921, 1e-9);
  const struct {
    double z, value;
  } ref[] = {{-5.0, 5.186503967125842115616509},   {-10.0, 10.09809323396251196284364},
             {-30.0, 30.03325966743367703707112},  {-38.0, 38.02627946657586898752219},
             {3.0, 0.004437839042125663793302104}, {8.0, 5.052271083536895430948107e-15}};
  for (const auto& r : ref) EXPECT_NEAR(inverse_mills(r.z) / r.value, 1.0, 1e-9) << "z = " << r.z;
  EXPECT_LT(inverse_mills(8.0), 1e-14);
}

TEST(Mills, PositiveAndStrictlyDecreasing) {
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000; ++k) {
    const double z = -30.0 + 38.0 * k / 999.0;
    const double v = inverse_mills(z);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev) << "z = " << z;
    prev = v;
  }
}

TEST(Mills, NormalCdfAndLogCdf) {
  EXPECT_NEAR(normal_cdf(-0.5244005127080407840382893), 0.3, 1e-15);
  EXPECT_NEAR(log_normal_cdf(-38.0), -726.5572160188201300965035, 1e-9);
}

TEST(Probit, InterceptOnly) {
  std::vector<double> half(100), thirty(1000);
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = i % 2 ? 1.0 : 0.0;
  for (std::size_t i = 0; i < thirty.size(); ++i) thirty[i] = i < 300 ? 1.0 : 0.0;
  Matrix one;
  one.rows = 100;
  one.cols = 1;
  one.data.assign(100, 1.0);
  one.names = {"(intercept)"};
  auto fit = fit_probit(one, half);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficients[0], 0.0, 1e-10);
  one.rows = 1000;
  one.data.assign(1000, 1.0);
  fit = fit_probit(one, thirty);
  EXPECT_NEAR(fit.coefficients[0], -0.5244005127080407840382893, 1e-8);
  EXPECT_LE(fit.gradient_norm, 1e-8);
}

TEST(Probit, RecoversCoefficientsAndLikelihoodIncreases) {
  Rng rng(12);
  const std::size_t n = 50000;
  std::vector<double> x(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    s[i] = 0.5 - 1.0 * x[i] + rng.normal() > 0.0 ? 1.0 : 0.0;
  }
  const auto ds = oracle::numeric_frame({{"x", x}});
  const auto fit = fit_probit(design(ds, {"x"}), s);
  ASSERT_TRUE(fit.converged);
  EXPECT_LT(std::abs(fit.coefficients[0] - 0.5), 3 * fit.std_errors[0]);
  EXPECT_LT(std::abs(fit.coefficients[1] + 1.0), 3 * fit.std_errors[1]);
  for (std::size_t k = 1; k < fit.log_likelihood_path.size(); ++k) {
    EXPECT_GE(fit.log_likelihood_path[k], fit.log_likelihood_path[k - 1]);
  }
}

TEST(Probit, SeparationAndCollinearity) {
  const auto ds = oracle::numeric_frame({{"x", {-3, -2, -1, 1, 2, 3}}, {"x2", {-6, -4, -2, 2, 4, 6}}});
  EXPECT_THROW(fit_probit(design(ds, {"x"}), std::vector<double>{0, 0, 0, 1, 1, 1}), SeparationError);
  EXPECT_THROW(fit_probit(design(ds, {"x", "x2"}), std::vector<double>{0, 1, 0, 1, 0, 1}), CollinearityError);
}

TEST(Heckman, ZeroCorrelationGivesZeroLambda) {
  const auto sample = latent_sample(0.0, 50000, 31);
  const auto fit = fit_latent(sample);
  const std::size_t k = fit.beta1.size();
  EXPECT_LT(std::abs(fit.beta_lambda), 3 * fit.std_errors[k]);
  EXPECT_LT(std::abs(fit.beta1[0] - 1.0), 3 * fit.std_errors[0]);
  EXPECT_LT(std::abs(fit.beta1[1] - 1.0), 3 * fit.std_errors[1]);
}

TEST(Heckman, RecoversLatentModel) {
  const auto sample = latent_sample(0.5, 100000, 32);
  const auto fit = fit_latent(sample);
  EXPECT_NEAR(fit.beta1[0], 1.0, 0.05);
  EXPECT_NEAR(fit.beta1[1], 1.0, 0.05);
  EXPECT_NEAR(fit.beta_lambda, 0.5, 0.05);
  EXPECT_TRUE(fit.warnings.empty());
}

TEST(Heckman, StageBResidualsOrthogonal) {
  const auto sample = latent_sample(0.5, 5000, 33);
  const auto& d = sample.data;
  const auto x1 = design(d, {"x1"});
  const auto fit = fit_latent(sample);
  const auto y = d.column("y").values();
  double scale = 0.0;
  std::vector<double> dot(x1.cols + 1, 0.0);
  for (std::size_t k = 0; k < fit.selected_rows.size(); ++k) {
    const std::size_t i = fit.selected_rows[k];
    double pred = fit.beta_lambda * fit.mills[k];
    for (std::size_t c = 0; c < x1.cols; ++c) pred += fit.beta1[c] * x1(i, c);
    const double r = y[i] - pred;
    for (std::size_t c = 0; c < x1.cols; ++c) dot[c] += r * x1(i, c);
    dot[x1.cols] += r * fit.mills[k];
    scale += std::abs(y[i]);
  }
  for (double v : dot) EXPECT_LT(std::abs(v), 1e-8 * scale);
}

TEST(Heckman, ZeroCorrelationPredictionsMatchOls) {
  const auto sample = latent_sample(0.0, 50000, 34);
  const auto& d = sample.data;
  const auto fit = fit_latent(sample);
  const auto x1 = design(d, {"x1"});
  const auto sel = x1.take_rows(fit.selected_rows);
  std::vector<double> ysel;
  for (auto i : fit.selected_rows) ysel.push_back(d.column("y").values()[i]);
  const auto b = ols(sel, ysel);
  const auto pred = predict_heckman(fit, x1);
  for (std::size_t i = 0; i < 100; ++i) {
    const double o = b[0] + b[1] * x1(i, 1);
    EXPECT_NEAR(pred[i], o, 0.05);
  }
}

TEST(Heckman, AllSelectedReducesToOls) {
  Rng rng(35);
  std::vector<double> x, z, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(rng.normal());
    z.push_back(rng.normal());
    y.push_back(2.0 - x.back() + rng.normal());
  }
  const auto ds = oracle::numeric_frame({{"x", x}, {"z", z}});
  const auto x1 = design(ds, {"x"});
  const auto fit = fit_heckman_two_step(x1, design(ds, {"x", "z"}), y, std::vector<double>(200, 1.0));
  EXPECT_TRUE(fit.mills_dropped);
  EXPECT_EQ(fit.beta1, ols(x1, y));
  EXPECT_EQ(fit.beta_lambda, 0.0);
}

TEST(Heckman, InterceptOnlyIsNotIdentified) {
  Rng rng(36);
  std::vector<double> y, s;
  for (int i = 0; i < 300; ++i) {
    s.push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
    y.push_back(s.back() == 1.0 ? rng.normal() : NAN);
  }
  const auto ds = oracle::numeric_frame({{"x", std::vector<double>(300, 0.0)}});
  const auto one = design(ds, {});
  EXPECT_THROW(fit_heckman_two_step(one, one, y, s), NumericalError);
}

TEST(Heckman, IdenticalDesignsWarn) {
  const auto sample = latent_sample(0.5, 3000, 37);
  const auto& d = sample.data;
  const auto x = design(d, {"x1", "x2"});
  const auto fit = fit_heckman_two_step(x, x, d.column("y").values(), d.column("s").values());
  ASSERT_FALSE(fit.warnings.empty());
  EXPECT_NE(fit.warnings[0].find("identical"), std::string::npos);
}

TEST(Heckman, PredictionScales) {
  HeckmanFit fit;
  fit.beta1 = {1.0, 2.0};
  Matrix x;
  x.rows = 1;
  x.cols = 2;
  x.data = {1.0, 3.0};
  EXPECT_EQ(predict_heckman(fit, x)[0], 7.0);
  fit.beta1 = {0.0, 0.0};
  EXPECT_EQ(predict_heckman(fit, x, HeckmanScale::log_then_back)[0], 1.0);
  fit.smearing_factor = 1.5;
  EXPECT_EQ(predict_heckman(fit, x, HeckmanScale::log_then_back, true)[0], 1.5);
}

TEST(Heckman, DesignEncodesCategoricals) {
  std::vector<std::optional<std::string>> g{"a", "b", "c", "a"};
  Dataset ds({Column::numeric("x", {1, 2, 3, 4}), Column::categorical_from_strings("g", g)});
  const auto spec = make_design_spec(ds, std::vector<std::string>{"x", "g"});
  const auto m = build_design(spec, ds);
  EXPECT_EQ(m.cols, 4u);
  EXPECT_EQ(m.names[0], "(intercept)");
  EXPECT_EQ(m(1, 2), 1.0);
  EXPECT_EQ(m(2, 3), 1.0);
  EXPECT_EQ(m(3, 2) + m(3, 3), 0.0);
  const auto report = heckman_report(fit_latent(latent_sample(0.5, 2000, 38)));
  for (const char* k : {"probit", "outcome", "warnings"}) EXPECT_TRUE(report.contains(k));
  EXPECT_TRUE(report["outcome"].contains("beta_lambda"));
}
