#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "selboost/csv.hpp"
#include "selboost/dataset.hpp"
#include "selboost/error.hpp"
#include "selboost/transform.hpp"
#include "support/oracles.hpp"

using namespace selboost;

namespace {

Dataset parse(const std::string& text, const Schema& schema = {}, std::string_view missing = "") {
  std::istringstream in(text);
  return parse_csv(in, schema, missing);
}

}  // namespace

TEST(Csv, ReadsNumericAndCategoricalColumns) {
  const auto ds = parse("a,b\n1,x\n2,y\n3,x\n");
  ASSERT_EQ(ds.n_rows(), 3u);
  ASSERT_EQ(ds.n_columns(), 2u);
  EXPECT_TRUE(ds.column("a").is_numeric());
  EXPECT_FALSE(ds.column("b").is_numeric());
  EXPECT_EQ(ds.column("a").values()[2], 3.0);
  EXPECT_EQ(ds.column("b").level_at(1).value(), "y");
  EXPECT_EQ(ds.row_ids()[0], 0);
  EXPECT_EQ(ds.row_ids()[2], 2);
}

TEST(Csv, MissingTokenMarksOnlyThatCell) {
  const auto ds = parse("a,b\n1,x\nNA,y\n3,NA\n", {}, "NA");
  EXPECT_TRUE(std::isnan(ds.column("a").values()[1]));
  EXPECT_EQ(ds.column("a").values()[0], 1.0);
  EXPECT_EQ(ds.column("a").values()[2], 3.0);
  EXPECT_TRUE(ds.column("b").is_missing(2));
  EXPECT_FALSE(ds.column("b").is_missing(0));
}

TEST(Csv, WrongArityNamesTheLine) {
  try {
    parse("a,b\n1,2\n3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, UnknownSchemaColumnIsSchemaError) {
  EXPECT_THROW(parse("a\n1\n", {{"zzz", ColumnKind::numeric}}), SchemaError);
}

TEST(Csv, SchemaForcesCategorical) {
  const auto ds = parse("code\n10\n20\n", {{"code", ColumnKind::categorical}});
  EXPECT_FALSE(ds.column("code").is_numeric());
  EXPECT_EQ(ds.column("code").levels().size(), 2u);
}

TEST(Csv, QuotedFields) {
  const auto f = split_csv_record(R"(a,"b,c","d ""q""")");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d \"q\"");
}

TEST(Csv, RoundTripIsIdentical) {
  Rng rng(11);
  std::ostringstream text;
  text << "x,cat,y\n";
  for (int i = 0; i < 200; ++i) {
    text << rng.normal() * 1e3 << ',' << (rng.uniform() < 0.1 ? "" : (rng.uniform() < 0.5 ? "u" : "v")) << ','
         << (rng.uniform() < 0.05 ? "" : std::to_string(rng.uniform())) << '\n';
  }
  const auto a = parse(text.str());
  const auto b = parse(to_csv(a));
  EXPECT_EQ(to_csv(a), to_csv(b));
  ASSERT_EQ(a.n_rows(), b.n_rows());
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    const double u = a.column("x").values()[i], v = b.column("x").values()[i];
    EXPECT_EQ(u, v);
    EXPECT_EQ(a.column("cat").level_at(i), b.column("cat").level_at(i));
  }
}

TEST(Csv, FormatDoubleRoundTrips) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(30)) - 15.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(DatasetInvariants, RejectsBadInputs) {
  EXPECT_THROW(oracle::numeric_frame({{"a", {1, 2}}, {"b", {1}}}), Error);
  EXPECT_THROW(oracle::numeric_frame({{"a", {1}}, {"a", {2}}}), Error);
  EXPECT_THROW(oracle::numeric_frame({{"s", {0, 2}}}, std::nullopt, "s"), Error);
  EXPECT_THROW(Dataset({Column::numeric("a", {1, 2})}, std::nullopt, std::nullopt, {-1.0, 1.0}), Error);
  EXPECT_THROW(Dataset({Column::numeric("a", {1, 2})}, std::nullopt, std::nullopt, {0.0, 0.0}), Error);
  EXPECT_THROW(Dataset({Column::numeric("a", {1, 2})}, std::nullopt, std::nullopt, {}, {4, 4}), Error);
  EXPECT_THROW(oracle::numeric_frame({{"a", {1, INFINITY}}}), Error);
}

TEST(DatasetInvariants, DefaultWeightsAreOne) {
  const auto ds = oracle::numeric_frame({{"a", {1, 2, 3}}});
  ASSERT_EQ(ds.weights().size(), 3u);
  for (double w : ds.weights()) EXPECT_EQ(w, 1.0);
}

TEST(Money, BindPlusBidEqualsBitExactly) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const auto bit = Money::from_cents(static_cast<std::int64_t>(rng.below(1'000'000'000'000ULL)));
    const auto bid = Money::from_cents(static_cast<std::int64_t>(rng.below(1'000'000'000'000ULL)));
    const auto t = TaxTriple::from(bit, bid);
    EXPECT_EQ(t.bind + t.bid, t.bit);
  }
  EXPECT_EQ(Money::from_units(0.1).cents() + Money::from_units(0.2).cents(), Money::from_units(0.3).cents());
}

TEST(ImputeMean, FillsWithObservedMean) {
  const auto ds = oracle::numeric_frame({{"a", {1, NAN, 3}}});
  const auto out = impute_mean(ds, "a");
  EXPECT_EQ(out.column("a").values()[1], 2.0);
  EXPECT_EQ(out.column("a").values()[0], 1.0);
  const auto single = impute_mean(oracle::numeric_frame({{"a", {5, NAN, NAN}}}), "a");
  for (double v : single.column("a").values()) EXPECT_EQ(v, 5.0);
}

TEST(ImputeMean, NoMissingIsIdentity) {
  const auto ds = oracle::numeric_frame({{"a", {1, 4, 9}}});
  EXPECT_EQ(to_csv(impute_mean(ds, "a")), to_csv(ds));
}

TEST(ImputeMean, AllMissingThrows) {
  EXPECT_THROW(impute_mean(oracle::numeric_frame({{"a", {NAN, NAN}}}), "a"), ImputationError);
}

TEST(LogTransform, Values) {
  const auto out = log_transform(oracle::numeric_frame({{"a", {1, std::exp(1.0), std::exp(2.0)}}}), "a");
  EXPECT_NEAR(out.column("a").values()[0], 0.0, 1e-15);
  EXPECT_NEAR(out.column("a").values()[1], 1.0, 1e-15);
  EXPECT_NEAR(out.column("a").values()[2], 2.0, 1e-15);
  EXPECT_EQ(log_transform(oracle::numeric_frame({{"a", {0}}}), "a", 1.0).column("a").values()[0], 0.0);
  EXPECT_THROW(log_transform(oracle::numeric_frame({{"a", {0}}}), "a"), DomainError);
}

TEST(FilterOutliersLog, AllEqualRemovesNothing) {
  const auto ds = oracle::numeric_frame({{"a", std::vector<double>(20, 7.0)}});
  const auto res = filter_outliers_log(ds, std::vector<std::string>{"a"});
  EXPECT_EQ(res.data.n_rows(), 20u);
  EXPECT_TRUE(res.removed.empty());
}

TEST(FilterOutliersLog, SingleExtremeRowRemoved) {
  // q25 = q75 = 1 on the log scale, threshold 1; ln(e^20) = 20 breaches it.
  std::vector<double> v(100, std::exp(1.0));
  v.push_back(std::exp(20.0));
  const auto res = filter_outliers_log(oracle::numeric_frame({{"a", v}}), std::vector<std::string>{"a"});
  EXPECT_EQ(res.data.n_rows(), 100u);
  ASSERT_EQ(res.removed_row_ids.size(), 1u);
  EXPECT_EQ(res.removed_row_ids[0], 100);
  EXPECT_NEAR(res.removed[0].threshold, 1.0, 1e-12);
  EXPECT_EQ(res.removed[0].column, "a");
}

TEST(FilterOutliersLog, ExtremeInSecondColumnOnly) {
  std::vector<double> a, b;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    a.push_back(std::exp(rng.uniform()));
    b.push_back(std::exp(rng.uniform()));
  }
  b[17] = std::exp(50.0);
  const auto res = filter_outliers_log(oracle::numeric_frame({{"a", a}, {"b", b}}), std::vector<std::string>{"a", "b"});
  ASSERT_EQ(res.removed_row_ids.size(), 1u);
  EXPECT_EQ(res.removed_row_ids[0], 17);
  EXPECT_EQ(res.removed[0].column, "b");
}

TEST(FilterOutliersLog, IdempotentInAllEqualCase) {
  const auto ds = oracle::numeric_frame({{"a", std::vector<double>(10, 3.0)}});
  const std::vector<std::string> cols{"a"};
  const auto once = filter_outliers_log(ds, cols);
  const auto twice = filter_outliers_log(once.data, cols);
  EXPECT_EQ(twice.data.n_rows(), once.data.n_rows());
}

TEST(FilterOutliersLog, TooFewRows) {
  EXPECT_THROW(filter_outliers_log(oracle::numeric_frame({{"a", {1, 2, 3}}}), std::vector<std::string>{"a"}),
               QuantileError);
}

namespace {

Dataset strata_frame(std::size_t per_stratum, std::size_t audited) {
  std::vector<std::optional<std::string>> region;
  std::vector<double> flag;
  for (std::size_t i = 0; i < 2 * per_stratum; ++i) {
    region.emplace_back(i < per_stratum ? "north" : "south");
    flag.push_back(0.0);
  }
  for (std::size_t i = 0; i < audited; ++i) {
    region.emplace_back("north");
    flag.push_back(1.0);
  }
  return Dataset({Column::categorical_from_strings("region", region), Column::numeric("s", flag)}, std::nullopt, "s");
}

}  // namespace

TEST(StratifiedUndersample, HalfOfEachStratum) {
  const auto ds = strata_frame(10, 0);
  const auto out = stratified_undersample(ds, std::vector<std::string>{"region"}, 1, 0.5, 99);
  std::size_t north = 0, south = 0;
  for (std::size_t i = 0; i < out.n_rows(); ++i) (out.column("region").level_at(i) == "north" ? north : south)++;
  EXPECT_EQ(north, 5u);
  EXPECT_EQ(south, 5u);
}

TEST(StratifiedUndersample, FractionOneIsIdentity) {
  const auto ds = strata_frame(7, 3);
  const auto out = stratified_undersample(ds, std::vector<std::string>{"region"}, 1, 1.0, 1);
  EXPECT_EQ(to_csv(out), to_csv(ds));
}

TEST(StratifiedUndersample, NeverDropsKeepAllRows) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = strata_frame(30, 9);
    const auto out = stratified_undersample(ds, std::vector<std::string>{"region"}, 1, 0.1 + 0.04 * seed, seed);
    const auto flags = out.flag_values();
    EXPECT_EQ(std::count(flags.begin(), flags.end(), 1), 9);
  }
}

TEST(StratifiedUndersample, AtLeastOnePerStratum) {
  const auto out = stratified_undersample(strata_frame(3, 0), std::vector<std::string>{"region"}, 1, 0.01, 4);
  EXPECT_EQ(out.n_rows(), 2u);
}

TEST(StratifiedUndersample, MissingStratumColumn) {
  EXPECT_THROW(stratified_undersample(strata_frame(3, 0), std::vector<std::string>{"nope"}, 1, 0.5, 0), SchemaError);
}

TEST(StratifiedUndersample, TableScaleComposition) {
  // 2'275'219 non-audited, 18'718 audited; keep 45'489 of the former.
  const double fraction = 45'489.0 / 2'275'219.0;
  const double kept = std::round(fraction * 2'275'219.0);
  const double share = kept / (kept + 18'718.0);
  EXPECT_NEAR(share, 0.7085, 5e-4);
  EXPECT_NEAR(1.0 - share, 0.2915, 5e-4);

  // Same arithmetic through the function on a 1:100 scaled population.
  const std::size_t pop = 22'752, audited = 187;
  std::vector<double> flag(pop, 0.0);
  flag.resize(pop + audited, 1.0);
  std::vector<std::optional<std::string>> stratum(pop + audited, std::string("all"));
  Dataset ds({Column::categorical_from_strings("k", stratum), Column::numeric("s", flag)}, std::nullopt, "s");
  const auto out = stratified_undersample(ds, std::vector<std::string>{"k"}, 1, fraction, 8);
  const auto f = out.flag_values();
  const double audited_share = static_cast<double>(std::count(f.begin(), f.end(), 1)) / static_cast<double>(f.size());
  EXPECT_NEAR(audited_share, 0.2915, 0.01);
}

TEST(TrainTestSplit, SizesAndDisjointness) {
  const auto ds = oracle::numeric_frame({{"a", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}});
  const auto [tr, te] = train_test_split(ds, 0.7, 42);
  EXPECT_EQ(tr.n_rows(), 7u);
  EXPECT_EQ(te.n_rows(), 3u);
  std::set<std::int64_t> ids(tr.row_ids().begin(), tr.row_ids().end());
  for (auto id : te.row_ids()) EXPECT_TRUE(ids.insert(id).second);
  EXPECT_EQ(ids.size(), 10u);
}

TEST(TrainTestSplit, Deterministic) {
  const auto a = split_indices(1000, 0.7, 9);
  const auto b = split_indices(1000, 0.7, 9);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, split_indices(1000, 0.7, 10));
}

TEST(TrainTestSplit, TableScaleSizes) {
  // The reported 13'064 / 5'654 partition of 18'718 is within three binomial
  // standard deviations of the deterministic 70% count we produce.
  const auto [tr, te] = split_indices(18'718, 0.7, 1);
  EXPECT_EQ(tr.size() + te.size(), 18'718u);
  const double sd = std::sqrt(18'718 * 0.7 * 0.3);
  EXPECT_LT(std::abs(static_cast<double>(tr.size()) - 13'064.0), 3 * sd);
  EXPECT_EQ(tr.size(), 13'103u);
}

TEST(TrainTestSplit, TooFewRows) {
  EXPECT_THROW(train_test_split(oracle::numeric_frame({{"a", {1}}}), 0.5, 0), SplitError);
}

TEST(SparseColumns, ColumnWiseFilter) {
  const auto ds = oracle::numeric_frame({{"dense", {1, 2, 3, 4, 5}}, {"sparse", {1, NAN, NAN, NAN, NAN}}});
  const auto fr = missing_fractions(ds);
  EXPECT_DOUBLE_EQ(fr[1].second, 0.8);
  EXPECT_EQ(drop_sparse_columns(ds, 0.8).n_columns(), 2u);
  EXPECT_EQ(drop_sparse_columns(ds, 0.5).n_columns(), 1u);
}

TEST(DropMissingRows, Drops) {
  const auto ds = oracle::numeric_frame({{"a", {1, NAN, 3}}});
  const auto out = drop_missing_rows(ds, "a");
  EXPECT_EQ(out.n_rows(), 2u);
  EXPECT_EQ(out.row_ids()[1], 2);
}
