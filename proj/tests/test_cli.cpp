#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selboost/loss.hpp"
#include "selboost/random.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("selboost_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  int run(const std::string& args) const {
    const std::string cmd =
        std::string(SELBOOST_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name) << content;
    return dir_ / name;
  }

  fs::path config(const nlohmann::json& j, const std::string& name = "config.json") const {
    return write(name, j.dump(2));
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json json(const fs::path& p) const { return nlohmann::json::parse(read(p)); }

  std::string log() const { return read(dir_ / "stdout.txt"); }

  fs::path dir_;
};

nlohmann::json small_grid() {
  return {{"base", {{"n_iter", 30}, {"min_node", 5}}}, {"grid", {{"n_iter", {10, 30}}, {"depth", {2}}}}};
}

nlohmann::json synthetic_config(std::size_t n = 1500) {
  return {{"seed", 11},
          {"input", {{"dgp", {{"kind", "nonlinear_regression"}, {"parameters", {{"shape", "step"}}}}}, {"n", n}}},
          {"preprocess", {{{"step", "cutoff_selection"}, {"proxy", "proxy"}, {"percentile", 0.8}, {"random_fraction", 0.1}}}},
          {"exclude", {"proxy"}},
          {"truth", {{"outcome", "y_full"}, {"mean", "mean"}}},
          {"step1", small_grid()},
          {"step2", small_grid()},
          {"bootstrap", {{"B", 2}}},
          {"output_dir", "out"}};
}

// Firms with a declared base below their potential one; the gap is 10% for
// "young" and 40% for "old".
std::string tax_csv(std::size_t n, bool constant_bit = false) {
  selboost::Rng rng(5);
  std::ostringstream out;
  out << "x1,x2,age,y,bid,audited\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.normal(), x2 = rng.normal();
    const bool old = i % 2 == 1;
    const double bit = constant_bit ? 100.0 : 100.0 + 20.0 * x1 + 5.0 * x2 + 2.0 * rng.normal();
    const double bid = constant_bit ? 100.0 : bit * (old ? 0.6 : 0.9);
    const bool audited = rng.uniform() < selboost::sigmoid(x1 - 1.0);
    out << x1 << ',' << x2 << ',' << (old ? "old" : "young") << ',';
    if (audited) out << bit;
    out << ',' << bid << ',' << (audited ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::json tax_config(const std::string& csv) {
  // R2 is undefined on a constant outcome, so tune step 2 on MSE.
  auto step2 = small_grid();
  step2["metric"] = "mse";
  return {{"seed", 3},
          {"input", {{"csv", csv}}},
          {"selection_flag", "audited"},
          {"bid", "bid"},
          {"groups", "age"},
          {"exclude", {"age"}},
          {"step1", small_grid()},
          {"step2", step2},
          {"bootstrap", {{"B", 5}}},
          {"output_dir", "out"}};
}

}  // namespace

TEST_F(Cli, FitWritesCompleteReport) {
  const auto cfg = config(synthetic_config());
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  const auto out = dir_ / "out";
  for (const char* f : {"report.json", "two_step_model.json", "heckman_fit.json", "step1_scores.csv",
                        "step2_scores.csv", "predictions.csv", "roc_step1.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto rep = json(out / "report.json");
  for (const char* k : {"data", "step1", "step2", "weights", "heckman", "test", "not_selected"}) {
    EXPECT_TRUE(rep.contains(k)) << k;
  }
  EXPECT_TRUE(rep["step1"]["auc_in_sample"].is_number());
  for (const char* method : {"two_step", "heckman", "unweighted_gb"}) {
    for (const char* part : {"test", "not_selected"}) {
      for (const char* m : {"mse", "r2_determination", "r2_relative_mse", "predicted_total"}) {
        const auto& v = rep[part][method][m];
        ASSERT_TRUE(v.is_number()) << part << '/' << method << '/' << m;
        EXPECT_TRUE(std::isfinite(v.get<double>()));
      }
    }
  }
}

TEST_F(Cli, SeededRerunIsByteIdentical) {
  const auto cfg = config(synthetic_config());
  ASSERT_EQ(run("fit --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0) << log();
  ASSERT_EQ(run("fit --config " + cfg.string() + " --out " + (dir_ / "b").string() + " --threads 3"), 0) << log();
  for (const char* f : {"report.json", "two_step_model.json", "heckman_fit.json", "predictions.csv"}) {
    EXPECT_EQ(read(dir_ / "a" / f), read(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(run("fit --config " + cfg.string() + " --out " + (dir_ / "c").string() + " --seed 12"), 0) << log();
  EXPECT_NE(read(dir_ / "a" / "report.json"), read(dir_ / "c" / "report.json"));
}

TEST_F(Cli, GenerateMaterializesDgp) {
  const auto cfg = config(synthetic_config(200));
  ASSERT_EQ(run("generate --config " + cfg.string()), 0) << log();
  const auto csv = read(dir_ / "out" / "generated.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
  EXPECT_EQ(json(dir_ / "out" / "dgp.json")["kind"], "nonlinear_regression");
}

TEST_F(Cli, PrepareWithoutStepsCopiesInput) {
  const auto csv = write("data.csv", "a,b\n1,x\n2.50,y\n,z\n");
  ASSERT_EQ(run("prepare --config " + config({{"input", {{"csv", csv.string()}}}}).string()), 0) << log();
  EXPECT_EQ(read(dir_ / "out" / "prepared.csv"), read(csv));
}

TEST_F(Cli, PrepareReportsRemovedRows) {
  std::ostringstream text;
  text << "v\n";
  for (int i = 0; i < 50; ++i) text << 2.718281828 << '\n';
  text << 1e9 << '\n';
  const auto csv = write("data.csv", text.str());
  nlohmann::json cfg = {{"input", {{"csv", csv.string()}}},
                        {"preprocess", {{{"step", "filter_outliers_log"}, {"columns", {"v"}}}}}};
  ASSERT_EQ(run("prepare --config " + config(cfg).string()), 0) << log();
  const auto rep = json(dir_ / "out" / "prepare_report.json");
  EXPECT_EQ(rep["steps"][0]["removed_count"], 1);
  EXPECT_EQ(rep["output_rows"], 50);
}

TEST_F(Cli, PrepareStepErrorNamesStep) {
  const auto csv = write("data.csv", "v\n1\n0\n");
  nlohmann::json cfg = {{"input", {{"csv", csv.string()}}},
                        {"preprocess", {{{"step", "log_transform"}, {"column", "v"}}}}};
  EXPECT_EQ(run("prepare --config " + config(cfg).string()), 3);
  EXPECT_NE(log().find("log_transform"), std::string::npos);
}

TEST_F(Cli, BootstrapSmokeRun) {
  const auto cfg = config(synthetic_config());
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  ASSERT_EQ(run("bootstrap --config " + cfg.string()), 0) << log();
  const auto ens = read(dir_ / "out" / "ensemble.csv");
  EXPECT_EQ(std::count(ens.begin(), ens.end(), '\n'), 1 + 2 * 1500);
  const auto rep = json(dir_ / "out" / "bootstrap_report.json");
  EXPECT_EQ(rep["B"], 2);
  EXPECT_TRUE(rep["unselected"]["coverage_conditional_mean"].is_number());
}

TEST_F(Cli, BootstrapConstantOutcomeHasZeroWidth) {
  const auto csv = write("data.csv", tax_csv(600, true));
  const auto cfg = config(tax_config(csv.string()));
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  ASSERT_EQ(run("bootstrap --config " + cfg.string()), 0) << log();
  const auto rep = json(dir_ / "out" / "bootstrap_report.json");
  for (const char* part : {"train", "test"}) {
    EXPECT_EQ(rep[part]["mean_width"], 0.0);
    EXPECT_EQ(rep[part]["coverage_observed"], 1.0);
  }
}

TEST_F(Cli, BootstrapWithoutModelIsDataError) {
  EXPECT_EQ(run("bootstrap --config " + config(synthetic_config()).string()), 3);
}

TEST_F(Cli, PropensityRecoversPlantedGroupOrdering) {
  const auto csv = write("data.csv", tax_csv(3000));
  const auto cfg = config(tax_config(csv.string()));
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  ASSERT_EQ(run("propensity --config " + cfg.string()), 0) << log();
  const auto rep = json(dir_ / "out" / "propensity_report.json");
  const double young = rep["by_group"]["young"]["propensity"], old = rep["by_group"]["old"]["propensity"];
  EXPECT_GT(old, young);
  EXPECT_NEAR(old, 0.4, 0.1);
  EXPECT_NEAR(young, 0.1, 0.1);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "propensity_groups.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "propensity_units.csv"));
}

TEST_F(Cli, PropensityModelEqualToDeclaredBase) {
  const auto csv = write("data.csv", tax_csv(600, true));
  auto j = tax_config(csv.string());
  j.erase("groups");
  const auto cfg = config(j);
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  ASSERT_EQ(run("propensity --config " + cfg.string()), 0) << log();
  EXPECT_EQ(json(dir_ / "out" / "propensity_report.json")["overall"], 0.0);
}

TEST_F(Cli, PropensitySingleGroupEqualsOverall) {
  std::string text = tax_csv(800);
  // Rename both age labels to a single class.
  for (auto pos = text.find("young"); pos != std::string::npos; pos = text.find("young")) text.replace(pos, 5, "all");
  for (auto pos = text.find(",old,"); pos != std::string::npos; pos = text.find(",old,")) text.replace(pos, 5, ",all,");
  const auto csv = write("data.csv", text);
  const auto cfg = config(tax_config(csv.string()));
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  ASSERT_EQ(run("propensity --config " + cfg.string()), 0) << log();
  const auto rep = json(dir_ / "out" / "propensity_report.json");
  EXPECT_EQ(rep["by_group"]["all"]["propensity"], rep["overall"]);
}

TEST_F(Cli, PropensityWithoutBidIsSchemaError) {
  const auto csv = write("data.csv", tax_csv(600));
  auto j = tax_config(csv.string());
  const auto cfg = config(j);
  ASSERT_EQ(run("fit --config " + cfg.string()), 0) << log();
  j.erase("bid");
  EXPECT_EQ(run("propensity --config " + config(j, "nobid.json").string()), 3);
}

TEST_F(Cli, CompareReportsBothMethods) {
  const auto cfg = config(synthetic_config());
  ASSERT_EQ(run("compare --config " + cfg.string()), 0) << log();
  const auto rep = json(dir_ / "out" / "compare_report.json");
  for (const char* part : {"selected", "not_selected"}) {
    for (const char* method : {"two_step", "heckman"}) {
      EXPECT_TRUE(rep[part][method]["r2_relative_mse"].is_number()) << part << method;
    }
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate --config x.json"), 2);
  EXPECT_EQ(run("fit"), 2);
  EXPECT_EQ(run("fit --config " + write("bad.json", "{ not json").string()), 2);
  EXPECT_EQ(run("fit --config " + (dir_ / "absent.json").string()), 2);
  auto j = synthetic_config();
  j["step1"]["metric"] = "r2";
  EXPECT_EQ(run("fit --config " + config(j, "mismatch.json").string()), 2);
  EXPECT_EQ(run("fit --config " + config({{"input", {{"csv", "nope.csv"}}}}, "missing.json").string()), 3);

  // Every unit selected.
  auto all = synthetic_config();
  all["preprocess"][0]["random_fraction"] = 1.0;
  EXPECT_EQ(run("fit --config " + config(all, "all.json").string()), 3);
  EXPECT_NE(log().find("selected"), std::string::npos);

  // Selection perfectly predicted by a covariate: the probit diverges.
  std::ostringstream text;
  text << "x,y,s\n";
  selboost::Rng rng(1);
  for (int i = 0; i < 400; ++i) {
    const double x = rng.normal();
    text << x << ',';
    if (x > 0) text << x + rng.normal();
    text << ',' << (x > 0 ? 1 : 0) << '\n';
  }
  const auto csv = write("sep.csv", text.str());
  nlohmann::json sep = {{"input", {{"csv", csv.string()}}}, {"selection_flag", "s"}, {"step1", small_grid()},
                        {"step2", small_grid()}};
  EXPECT_EQ(run("fit --config " + config(sep, "sep.json").string()), 4) << log();
}
