#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "selboost/error.hpp"
#include "selboost/metrics.hpp"
#include "selboost/numeric.hpp"
#include "selboost/random.hpp"
#include "selboost/selection.hpp"
#include "selboost/serialize.hpp"
#include "selboost/transform.hpp"
#include "selboost/uncertainty.hpp"

namespace selboost::cli {
namespace {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
}

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : ""; }

Dataset prepared_data(const ExperimentConfig& cfg) {
  auto ds = apply_preprocess(cfg, load_input(cfg)).data;
  if (!ds.has_column(cfg.outcome)) throw SchemaError("outcome column '" + cfg.outcome + "' not found");
  if (!ds.selection_flag()) {
    if (!cfg.selection_flag || !ds.has_column(*cfg.selection_flag)) {
      throw SchemaError("no selection flag column; set 'selection_flag' or add a cutoff_selection step");
    }
    ds = ds.with_selection_flag(*cfg.selection_flag);
  }
  return ds.with_outcome(cfg.outcome);
}

// Row partition used by fit and bootstrap: every non-selected row plus a
// train share of the selected rows fit the models; the other selected rows are the test set.
struct Partition {
  std::vector<std::size_t> train;  // sorted positions in the prepared data
  std::vector<std::size_t> train_selected;
  std::vector<std::size_t> test;
  std::vector<std::size_t> unselected;
};

Partition partition(const ExperimentConfig& cfg, const Dataset& ds, bool hold_out) {
  Partition p;
  const auto flags = ds.flag_values();
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < flags.size(); ++i) (flags[i] == 1 ? selected : p.unselected).push_back(i);
  if (selected.empty()) throw DegenerateTargetError("no rows are selected");
  if (p.unselected.empty()) throw DegenerateTargetError("every row is selected");
  if (hold_out) {
    const auto [tr, te] = split_indices(selected.size(), cfg.train_fraction, derive_seed(cfg.seed, "split"));
    for (std::size_t k : tr) p.train_selected.push_back(selected[k]);
    for (std::size_t k : te) p.test.push_back(selected[k]);
  } else {
    p.train_selected = selected;
  }
  p.train = p.unselected;
  p.train.insert(p.train.end(), p.train_selected.begin(), p.train_selected.end());
  std::sort(p.train.begin(), p.train.end());
  return p;
}

struct HeckmanModel {
  HeckmanFit fit;
  DesignSpec x1;
  DesignSpec x2;
  HeckmanScale scale = HeckmanScale::linear;
  bool smearing = false;

  std::vector<double> predict(const Dataset& rows) const {
    return predict_heckman(fit, build_design(x1, rows), scale, smearing);
  }

  nlohmann::json to_json() const {
    auto j = heckman_report(fit);
    j["x1_design"] = design_spec_to_json(x1);
    j["x2_design"] = design_spec_to_json(x2);
    j["scale"] = scale == HeckmanScale::linear ? "linear" : "log_then_back";
    j["smearing"] = smearing;
    return j;
  }
};

HeckmanModel fit_heckman_model(const ExperimentConfig& cfg, const Dataset& train,
                               const std::vector<std::string>& features) {
  HeckmanModel m;
  const auto x1_cols = cfg.heckman.x1.empty() ? features : cfg.heckman.x1;
  const auto x2_cols = cfg.heckman.x2.empty() ? features : cfg.heckman.x2;
  m.x1 = make_design_spec(train, x1_cols);
  m.x2 = make_design_spec(train, x2_cols);
  m.scale = cfg.heckman.scale;
  m.smearing = cfg.heckman.smearing;
  const auto flags = train.flag_values();
  std::vector<double> s(flags.begin(), flags.end());
  std::vector<double> y(train.column(cfg.outcome).values().begin(), train.column(cfg.outcome).values().end());
  if (m.scale == HeckmanScale::log_then_back) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (s[i] != 1.0) continue;
      if (!(y[i] > 0.0)) throw DomainError("heckman log scale needs a positive outcome on selected rows");
      y[i] = std::log(y[i]);
    }
  }
  m.fit = fit_heckman_two_step(build_design(m.x1, train), build_design(m.x2, train), y, s);
  return m;
}

struct Pipeline {
  TuneResult tune1;
  TuneResult tune2;
  TwoStepModel two_step;
  BoostModel unweighted;
  HeckmanModel heckman;
  std::vector<std::string> features;
};

Pipeline fit_pipeline(const ExperimentConfig& cfg, const Dataset& train) {
  Pipeline p;
  p.features = model_features(cfg, train);
  const auto flag = *train.selection_flag();
  p.tune1 = tune_grid(train, flag, {}, cfg.step1.grid, cfg.step1.protocol, cfg.step1.metric, p.features, cfg.threads);

  const auto pi = estimate_inclusion_probabilities(train, p.tune1.best, cfg.clip_floor, p.features);
  const auto flags = train.column(flag).values();
  const auto nu = inverse_weights(pi, flags, cfg.clip_floor);
  const Dataset selected = train.take_rows(train.selected_rows());
  p.tune2 = tune_grid(selected, cfg.outcome, nu, cfg.step2.grid, cfg.step2.protocol, cfg.step2.metric, p.features,
                      cfg.threads);

  TwoStepOptions opt;
  opt.clip_floor = cfg.clip_floor;
  opt.features = p.features;
  p.two_step = fit_two_step(train, cfg.outcome, p.tune1.best, p.tune2.best, opt);
  p.unweighted = fit_gbm(selected, cfg.outcome, std::vector<double>(selected.n_rows(), 1.0), p.tune2.best, p.features);
  p.heckman = fit_heckman_model(cfg, train, p.features);
  return p;
}

nlohmann::json metrics_json(std::span<const double> pred, std::span<const double> truth) {
  nlohmann::json j = {{"n", truth.size()}, {"mse", mse(pred, truth)}};
  j["predicted_total"] = compensated_sum(pred);
  j["observed_total"] = compensated_sum(truth);
  try {
    j["r2_determination"] = r2(pred, truth, R2Variant::determination);
    j["r2_relative_mse"] = r2(pred, truth, R2Variant::relative_mse);
  } catch (const MetricError&) {
    j["r2_determination"] = nullptr;
    j["r2_relative_mse"] = nullptr;
  }
  return j;
}

std::vector<double> pick(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

nlohmann::json compare_block(const Pipeline& p, const Dataset& rows, std::span<const double> truth) {
  nlohmann::json j;
  j["two_step"] = metrics_json(p.two_step.predict(rows), truth);
  j["heckman"] = metrics_json(p.heckman.predict(rows), truth);
  j["unweighted_gb"] = metrics_json(p.unweighted.predict(rows), truth);
  return j;
}

nlohmann::json tune_json(const TuneResult& t, Metric metric) {
  return {{"best", boost_config_to_json(t.best)},
          {"best_index", t.best_index},
          {"metric", std::string(to_string(metric))},
          {"score", t.best_score},
          {"grid_size", t.table.size()}};
}

// Truth for non-selected rows: the configured truth column, else the outcome where observed.
std::optional<std::vector<double>> truth_for(const ExperimentConfig& cfg, const Dataset& rows) {
  const std::string col = cfg.truth_outcome.value_or(cfg.outcome);
  if (!rows.has_column(col)) return std::nullopt;
  const auto v = rows.column(col).values();
  if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) return std::nullopt;
  return std::vector<double>(v.begin(), v.end());
}

fs::path model_path(const ExperimentConfig& cfg, const std::optional<fs::path>& model) {
  const auto path = model.value_or(cfg.output_dir / "two_step_model.json");
  if (!fs::exists(path)) throw DataError("model file not found: " + path.string() + " (run 'fit' first)");
  return path;
}

}  // namespace

void cmd_prepare(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  const auto out = cfg.output_dir / "prepared.csv";
  if (cfg.preprocess.empty() && cfg.input.csv) {
    if (!fs::exists(*cfg.input.csv)) throw DataError("input file not found: " + cfg.input.csv->string());
    load_input(cfg);  // validates the file
    write_file_atomic(out, read_bytes(*cfg.input.csv));
    write_json(cfg.output_dir / "prepare_report.json", {{"steps", nlohmann::json::array()}, {"copied", true}});
    return;
  }
  auto prepared = apply_preprocess(cfg, load_input(cfg));
  write_csv(prepared.data, out, cfg.input.missing_token);
  write_json(cfg.output_dir / "prepare_report.json", prepared.report);
}

void cmd_generate(const ExperimentConfig& cfg) {
  if (!cfg.input.dgp) throw ConfigError("generate needs input.dgp");
  ensure_output_dir(cfg);
  write_csv(with_truth_columns(generate(*cfg.input.dgp, cfg.input.n)), cfg.output_dir / "generated.csv");
  write_json(cfg.output_dir / "dgp.json", dgp_to_json(*cfg.input.dgp));
}

void cmd_fit(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  const Dataset ds = prepared_data(cfg);
  const auto part = partition(cfg, ds, true);
  const Dataset train = ds.take_rows(part.train);
  const Pipeline p = fit_pipeline(cfg, train);

  nlohmann::json report;
  report["data"] = {{"n_rows", ds.n_rows()},
                    {"n_selected", part.train_selected.size() + part.test.size()},
                    {"n_train_selected", part.train_selected.size()},
                    {"n_test", part.test.size()},
                    {"n_unselected", part.unselected.size()},
                    {"features", p.features}};
  report["step1"] = tune_json(p.tune1, cfg.step1.metric);
  report["step1"]["auc_in_sample"] = auc(p.two_step.pi_hat(), train.column(*train.selection_flag()).values());
  report["step1"]["importance"] = p.two_step.step1().importance();
  report["step2"] = tune_json(p.tune2, cfg.step2.metric);
  report["step2"]["importance"] = p.two_step.step2().importance();
  const auto pipe = pipeline_report(p.two_step, train, cfg.outcome);
  report["weights"] = pipe["weights"];
  report["heckman"] = heckman_report(p.heckman.fit);

  const auto y = ds.column(cfg.outcome).values();
  const Dataset test = ds.take_rows(part.test);
  if (!part.test.empty()) report["test"] = compare_block(p, test, pick(y, part.test));
  const Dataset unselected = ds.take_rows(part.unselected);
  if (const auto truth = truth_for(cfg, unselected)) report["not_selected"] = compare_block(p, unselected, *truth);
  if (cfg.truth_mean && ds.has_column(*cfg.truth_mean)) {
    report["not_selected_mean"] = compare_block(p, unselected, pick(ds.column(*cfg.truth_mean).values(), part.unselected));
  }

  write_json(cfg.output_dir / "report.json", report);
  write_json(cfg.output_dir / "two_step_model.json", two_step_to_json(p.two_step));
  write_json(cfg.output_dir / "heckman_fit.json", p.heckman.to_json());
  write_file_atomic(cfg.output_dir / "step1_scores.csv", score_table_csv(p.tune1));
  write_file_atomic(cfg.output_dir / "step2_scores.csv", score_table_csv(p.tune2));
  write_file_atomic(cfg.output_dir / "roc_step1.csv",
                    roc_csv(roc_points(p.two_step.pi_hat(), train.column(*train.selection_flag()).values())));

  // Predictions for every unit.
  const auto gb = p.two_step.predict(ds);
  const auto hk = p.heckman.predict(ds);
  const auto uw = p.unweighted.predict(ds);
  std::vector<std::string> part_of(ds.n_rows(), "unselected");
  for (std::size_t i : part.train_selected) part_of[i] = "train";
  for (std::size_t i : part.test) part_of[i] = "test";
  std::ostringstream csv;
  csv << "unit_id,part,two_step,heckman,unweighted_gb,outcome\n";
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    csv << ds.row_ids()[i] << ',' << part_of[i] << ',' << cell(gb[i]) << ',' << cell(hk[i]) << ',' << cell(uw[i]) << ','
        << cell(y[i]) << '\n';
  }
  write_file_atomic(cfg.output_dir / "predictions.csv", csv.str());
}

void cmd_bootstrap(const ExperimentConfig& cfg, const std::optional<fs::path>& model) {
  ensure_output_dir(cfg);
  const auto saved = two_step_from_json(read_json(model_path(cfg, model)));
  const Dataset ds = prepared_data(cfg);
  const auto part = partition(cfg, ds, true);
  const Dataset train = ds.take_rows(part.train);

  // Step-2 training rows with their inverse weights from the saved step-1 model.
  const auto pi = saved.inclusion_probabilities(train);
  const auto nu = inverse_weights(pi, train.column(*train.selection_flag()).values(), saved.clip_floor());
  const Dataset selected = train.take_rows(train.selected_rows()).with_weights(nu);
  const BoostModel& step2 = saved.step2();
  const FitPredictFn fit_fn = [&](const Dataset& resample, const Dataset& score, std::uint64_t seed) {
    BoostConfig c = step2.config();
    c.seed = seed;
    return fit_gbm(resample, cfg.outcome, {}, c, step2.features()).predict(score);
  };
  const auto ens = bootstrap_fit_predict(selected, ds, fit_fn, cfg.bootstrap_b, derive_seed(cfg.seed, "bootstrap"),
                                         cfg.threads);
  const auto iv = interval(ens, cfg.lower_q, cfg.upper_q);

  nlohmann::json report = {{"B", cfg.bootstrap_b}, {"quantiles", {cfg.lower_q, cfg.upper_q}}};
  const auto y = ds.column(cfg.outcome).values();
  std::optional<std::span<const double>> truth_y;
  if (cfg.truth_outcome && ds.has_column(*cfg.truth_outcome)) truth_y = ds.column(*cfg.truth_outcome).values();
  std::optional<std::span<const double>> truth_mean;
  if (cfg.truth_mean && ds.has_column(*cfg.truth_mean)) truth_mean = ds.column(*cfg.truth_mean).values();

  auto coverage_of = [&](const std::vector<std::size_t>& rows, std::span<const double> truth) -> nlohmann::json {
    std::vector<Interval> sub;
    std::vector<double> t;
    for (std::size_t i : rows) {
      if (std::isnan(truth[i])) continue;
      sub.push_back(iv[i]);
      t.push_back(truth[i]);
    }
    if (t.empty()) return nullptr;
    return coverage(sub, t);
  };
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &part.train_selected}, {"test", &part.test}, {"unselected", &part.unselected}};
  for (const auto& [name, rows] : parts) {
    nlohmann::json block = {{"n", rows->size()}};
    block["coverage_observed"] = coverage_of(*rows, truth_y ? *truth_y : y);
    if (truth_mean) block["coverage_conditional_mean"] = coverage_of(*rows, *truth_mean);
    std::vector<double> totals(ens.replicates);
    for (std::size_t j = 0; j < ens.replicates; ++j) {
      CompensatedSum s;
      for (std::size_t i : *rows) s += ens.predictions[j][i];
      totals[j] = s.value();
    }
    std::sort(totals.begin(), totals.end());
    block["total_interval"] = {quantile_sorted(totals, cfg.lower_q), quantile_sorted(totals, cfg.upper_q)};
    CompensatedSum width;
    for (std::size_t i : *rows) width += iv[i].second - iv[i].first;
    block["mean_width"] = rows->empty() ? 0.0 : width.value() / static_cast<double>(rows->size());
    report[name] = std::move(block);
  }

  write_file_atomic(cfg.output_dir / "intervals.csv", interval_csv(ens.unit_ids, iv));
  write_file_atomic(cfg.output_dir / "ensemble.csv", ensemble_csv(ens));
  write_json(cfg.output_dir / "bootstrap_report.json", report);
}

void cmd_propensity(const ExperimentConfig& cfg, const std::optional<fs::path>& model) {
  ensure_output_dir(cfg);
  if (!cfg.bid) throw SchemaError("propensity needs a 'bid' column in the config");
  const auto saved = two_step_from_json(read_json(model_path(cfg, model)));
  const Dataset ds = apply_preprocess(cfg, load_input(cfg)).data;
  if (!ds.has_column(*cfg.bid)) throw SchemaError("BID column '" + *cfg.bid + "' not found");
  const auto& bid_col = ds.column(*cfg.bid);
  if (!bid_col.is_numeric()) throw SchemaError("BID column '" + *cfg.bid + "' must be numeric");
  const auto bit_hat = saved.predict(ds);
  std::optional<std::vector<std::string>> groups;
  if (cfg.groups) {
    const auto& g = ds.column(*cfg.groups);
    groups.emplace();
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      if (g.is_numeric()) {
        groups->push_back(std::isnan(g.values()[i]) ? std::string() : format_double(g.values()[i]));
      } else {
        groups->push_back(std::string(g.level_at(i).value_or("")));
      }
    }
  }
  const auto rep = groups ? propensity_report(bit_hat, bid_col.values(), std::span<const std::string>(*groups))
                          : propensity_report(bit_hat, bid_col.values());
  nlohmann::json j = {{"overall", rep.overall},
                      {"overall_unfloored", rep.overall_raw},
                      {"total_bit", rep.total_bit},
                      {"total_bid", rep.total_bid},
                      {"total_bind", rep.total_bind},
                      {"total_bind_unfloored", rep.total_bind_raw},
                      {"floored_count", rep.floored_count},
                      {"nonpositive_bit_count", rep.nonpositive_bit_count},
                      {"n_units", bit_hat.size()}};
  nlohmann::json by_group = nlohmann::json::object();
  for (const auto& [label, g] : rep.by_group) {
    by_group[label] = {{"size", g.size},
                       {"total_bit", g.total_bit},
                       {"total_bind", g.total_bind},
                       {"propensity", g.propensity},
                       {"total_bind_unfloored", g.total_bind_raw},
                       {"propensity_unfloored", g.propensity_raw}};
  }
  j["by_group"] = std::move(by_group);
  write_json(cfg.output_dir / "propensity_report.json", j);
  write_file_atomic(cfg.output_dir / "propensity_groups.csv", propensity_group_csv(rep));
  write_file_atomic(cfg.output_dir / "propensity_units.csv",
                    propensity_unit_csv(rep, ds.row_ids(), bit_hat, bid_col.values()));
}

void cmd_compare(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  const Dataset ds = prepared_data(cfg);
  const auto part = partition(cfg, ds, false);
  const Pipeline p = fit_pipeline(cfg, ds);
  nlohmann::json report;
  report["data"] = {{"n_rows", ds.n_rows()},
                    {"n_selected", part.train_selected.size()},
                    {"n_unselected", part.unselected.size()}};
  report["step1"] = tune_json(p.tune1, cfg.step1.metric);
  report["step2"] = tune_json(p.tune2, cfg.step2.metric);
  report["heckman"] = heckman_report(p.heckman.fit);
  const auto y = ds.column(cfg.outcome).values();
  report["selected"] = compare_block(p, ds.take_rows(part.train_selected), pick(y, part.train_selected));
  const Dataset unselected = ds.take_rows(part.unselected);
  const auto truth = truth_for(cfg, unselected);
  if (!truth) throw SchemaError("compare needs the outcome (or truth.outcome) on non-selected units");
  report["not_selected"] = compare_block(p, unselected, *truth);
  write_json(cfg.output_dir / "compare_report.json", report);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Selection-bias-corrected gradient boosting and Heckman baseline"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;
  std::optional<std::string> model;
  app.add_option("--config", config_path, "Experiment config (JSON)")->required();
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  auto* prepare = app.add_subcommand("prepare", "Apply preprocessing steps and write prepared.csv");
  auto* generate_cmd = app.add_subcommand("generate", "Materialize the configured DGP to CSV");
  auto* fit = app.add_subcommand("fit", "Tune and fit the two-step model and the Heckman baseline");
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap intervals for step-2 predictions");
  auto* propensity = app.add_subcommand("propensity", "Evasion-propensity report from a fitted model");
  auto* compare = app.add_subcommand("compare", "Compare both methods on selected and non-selected units");
  for (auto* sub : {bootstrap, propensity}) sub->add_option("--model", model, "two_step_model.json path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nlohmann::json j;
    {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
      }
    }
    if (seed) j["seed"] = *seed;
    const fs::path base = fs::path(config_path).parent_path();
    ExperimentConfig cfg = parse_config(j, base);
    if (out_dir) cfg.output_dir = *out_dir;
    cfg.threads = threads;
    const std::optional<fs::path> model_file = model ? std::optional<fs::path>(*model) : std::nullopt;

    if (prepare->parsed()) cmd_prepare(cfg);
    if (generate_cmd->parsed()) cmd_generate(cfg);
    if (fit->parsed()) cmd_fit(cfg);
    if (bootstrap->parsed()) cmd_bootstrap(cfg, model_file);
    if (propensity->parsed()) cmd_propensity(cfg, model_file);
    if (compare->parsed()) cmd_compare(cfg);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.error_class()) {
      case ErrorClass::config:
        return 2;
      case ErrorClass::data:
        return 3;
      case ErrorClass::numerical:
        return 4;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace selboost::cli
