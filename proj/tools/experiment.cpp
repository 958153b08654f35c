#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "selboost/error.hpp"
#include "selboost/random.hpp"
#include "selboost/serialize.hpp"
#include "selboost/transform.hpp"

namespace selboost::cli {
namespace {

std::vector<double> number_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_number()) return {j.get<double>()};
  // {"from": a, "to": b, "by": step}, inclusive of b up to rounding.
  const double from = j.at("from").get<double>();
  const double to = j.at("to").get<double>();
  const double by = j.at("by").get<double>();
  if (!(by > 0.0) || to < from) throw ConfigError("range needs by > 0 and to >= from");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((to - from) / by + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(from + by * static_cast<double>(k));
  return out;
}

std::vector<int> int_list(const nlohmann::json& j) {
  std::vector<int> out;
  for (double v : number_list(j)) out.push_back(static_cast<int>(std::llround(v)));
  return out;
}

StepGrid parse_step(const nlohmann::json& j, LossKind loss, Metric metric, std::uint64_t master, const char* name) {
  StepGrid step;
  BoostConfig base;
  base.loss = loss;
  base.n_iter = 100;
  base.depth = 2;
  base.shrinkage = 0.1;
  base.bag_fraction = 0.5;
  base.min_node = 10;
  if (j.contains("base")) base = boost_config_from_json(j.at("base"), base);
  base.seed = derive_seed(master, name);
  const auto g = j.value("grid", nlohmann::json::object());
  const auto n_iters = g.contains("n_iter") ? int_list(g.at("n_iter")) : std::vector<int>{base.n_iter};
  const auto depths = g.contains("depth") ? int_list(g.at("depth")) : std::vector<int>{base.depth};
  const auto shrink = g.contains("shrinkage") ? number_list(g.at("shrinkage")) : std::vector<double>{base.shrinkage};
  step.grid = make_grid(n_iters, depths, shrink, base);
  step.metric = j.contains("metric") ? parse_metric(j.at("metric").get<std::string>()) : metric;
  const auto p = j.value("protocol", nlohmann::json::object());
  const std::uint64_t tune_seed = derive_seed(master, std::string(name) + "_tune");
  const auto kind = p.value("kind", std::string("holdout"));
  if (kind == "holdout") {
    step.protocol = Holdout{p.value("train_fraction", 0.7), tune_seed};
  } else if (kind == "kfold") {
    step.protocol = KFold{p.value("k", 5), tune_seed};
  } else {
    throw ConfigError("unknown protocol '" + kind + "'");
  }
  return step;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  return j.value(key, std::vector<std::string>{});
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    cfg.seed = j.value("seed", std::uint64_t{0});

    const auto& in = j.at("input");
    if (in.contains("csv")) {
      cfg.input.csv = resolve(base_dir, in.at("csv").get<std::string>());
      cfg.input.missing_token = in.value("missing_token", std::string());
      for (const auto& [name, kind] : in.value("schema", nlohmann::json::object()).items()) {
        const auto k = kind.get<std::string>();
        if (k == "numeric") {
          cfg.input.schema[name] = ColumnKind::numeric;
        } else if (k == "categorical") {
          cfg.input.schema[name] = ColumnKind::categorical;
        } else {
          throw ConfigError("schema kind for '" + name + "' must be numeric or categorical");
        }
      }
    } else if (in.contains("dgp")) {
      auto dgp_json = in.at("dgp");
      if (!dgp_json.contains("seed")) dgp_json["seed"] = derive_seed(cfg.seed, "dgp");
      cfg.input.dgp = dgp_from_json(dgp_json);
      cfg.input.n = in.at("n").get<std::size_t>();
    } else {
      throw ConfigError("input needs either 'csv' or 'dgp'");
    }

    cfg.outcome = j.value("outcome", cfg.outcome);
    if (j.contains("selection_flag")) cfg.selection_flag = j.at("selection_flag").get<std::string>();
    cfg.features = string_list(j, "features");
    cfg.exclude = string_list(j, "exclude");
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      if (t.contains("outcome")) cfg.truth_outcome = t.at("outcome").get<std::string>();
      if (t.contains("mean")) cfg.truth_mean = t.at("mean").get<std::string>();
    }
    if (j.contains("bid")) cfg.bid = j.at("bid").get<std::string>();
    if (j.contains("groups")) cfg.groups = j.at("groups").get<std::string>();
    cfg.preprocess = j.value("preprocess", nlohmann::json::array());
    if (!cfg.preprocess.is_array()) throw ConfigError("preprocess must be an array of steps");

    cfg.step1 = parse_step(j.value("step1", nlohmann::json::object()), LossKind::logistic, Metric::auc, cfg.seed,
                           "step1");
    cfg.step2 = parse_step(j.value("step2", nlohmann::json::object()), LossKind::squared_error, Metric::r2, cfg.seed,
                           "step2");
    cfg.clip_floor = j.value("clip_floor", cfg.clip_floor);

    const auto h = j.value("heckman", nlohmann::json::object());
    cfg.heckman.x1 = string_list(h, "x1");
    cfg.heckman.x2 = string_list(h, "x2");
    const auto scale = h.value("scale", std::string("linear"));
    if (scale == "linear") {
      cfg.heckman.scale = HeckmanScale::linear;
    } else if (scale == "log_then_back") {
      cfg.heckman.scale = HeckmanScale::log_then_back;
    } else {
      throw ConfigError("heckman.scale must be linear or log_then_back");
    }
    cfg.heckman.smearing = h.value("smearing", false);

    cfg.train_fraction = j.value("split", nlohmann::json::object()).value("train_fraction", cfg.train_fraction);
    const auto b = j.value("bootstrap", nlohmann::json::object());
    cfg.bootstrap_b = b.value("B", cfg.bootstrap_b);
    if (b.contains("quantiles")) {
      const auto q = b.at("quantiles").get<std::vector<double>>();
      if (q.size() != 2) throw ConfigError("bootstrap.quantiles needs two levels");
      cfg.lower_q = q[0];
      cfg.upper_q = q[1];
    }
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

Dataset load_input(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.input.csv) {
    if (!std::filesystem::exists(*cfg.input.csv)) throw DataError("input file not found: " + cfg.input.csv->string());
    ds = load_csv(*cfg.input.csv, cfg.input.schema, cfg.input.missing_token);
  } else {
    ds = with_truth_columns(generate(*cfg.input.dgp, cfg.input.n));
  }
  if (cfg.selection_flag && ds.has_column(*cfg.selection_flag)) ds = ds.with_selection_flag(*cfg.selection_flag);
  if (ds.has_column(cfg.outcome)) ds = ds.with_outcome(cfg.outcome);
  return ds;
}

Prepared apply_preprocess(const ExperimentConfig& cfg, Dataset ds) {
  Prepared out;
  out.report = {{"input_rows", ds.n_rows()}, {"steps", nlohmann::json::array()}};
  std::size_t index = 0;
  for (const auto& step : cfg.preprocess) {
    const auto name = step.value("step", std::string());
    const std::size_t before = ds.n_rows();
    nlohmann::json entry = {{"step", name}, {"rows_before", before}};
    const std::uint64_t seed = derive_seed(cfg.seed, "preprocess", index++);
    try {
      if (name == "impute_mean") {
        ds = impute_mean(ds, step.at("column").get<std::string>());
      } else if (name == "log_transform") {
        ds = log_transform(ds, step.at("column").get<std::string>(), step.value("offset", 0.0));
      } else if (name == "filter_outliers_log") {
        const auto cols = step.at("columns").get<std::vector<std::string>>();
        auto res = filter_outliers_log(ds, cols, step.value("k", 1.5));
        nlohmann::json removed = nlohmann::json::array();
        for (const auto& r : res.removed) {
          removed.push_back({{"row_id", r.row_id}, {"column", r.column}, {"value", r.value}, {"threshold", r.threshold}});
        }
        entry["removed"] = std::move(removed);
        entry["removed_count"] = res.removed_row_ids.size();
        ds = std::move(res.data);
      } else if (name == "stratified_undersample") {
        const auto strata = step.at("strata").get<std::vector<std::string>>();
        ds = stratified_undersample(ds, strata, step.value("keep_all_flag", 1), step.at("fraction").get<double>(), seed);
      } else if (name == "drop_missing_rows") {
        ds = drop_missing_rows(ds, step.at("column").get<std::string>());
      } else if (name == "drop_columns") {
        ds = ds.without_columns(step.at("columns").get<std::vector<std::string>>());
      } else if (name == "drop_sparse_columns") {
        ds = drop_sparse_columns(ds, step.value("max_missing_fraction", 0.8));
      } else if (name == "cutoff_selection") {
        const auto flag = step.value("flag", cfg.selection_flag.value_or("s"));
        ds = cutoff_selection(ds, step.at("proxy").get<std::string>(), step.value("percentile", 0.9),
                              step.value("random_fraction", 0.05), seed, flag);
      } else {
        throw ConfigError("unknown preprocessing step '" + name + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("step " + std::to_string(index) + " (" + name + "): " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("step " + std::to_string(index) + " (" + name + "): " + e.what());
    } catch (const DataError& e) {
      throw DataError("step " + std::to_string(index) + " (" + name + "): " + e.what());
    } catch (const NumericalError& e) {
      throw FitError("step " + std::to_string(index) + " (" + name + "): " + e.what());
    }
    entry["rows_after"] = ds.n_rows();
    out.report["steps"].push_back(std::move(entry));
  }
  out.report["output_rows"] = ds.n_rows();
  out.data = std::move(ds);
  return out;
}

std::vector<std::string> model_features(const ExperimentConfig& cfg, const Dataset& ds) {
  std::vector<std::string> out;
  auto skip = [&](const std::string& name) {
    if (name == cfg.outcome) return true;
    if (ds.selection_flag() && name == *ds.selection_flag()) return true;
    if (cfg.selection_flag && name == *cfg.selection_flag) return true;
    if (cfg.truth_outcome && name == *cfg.truth_outcome) return true;
    if (cfg.truth_mean && name == *cfg.truth_mean) return true;
    if (cfg.bid && name == *cfg.bid) return true;
    if (std::find(cfg.exclude.begin(), cfg.exclude.end(), name) != cfg.exclude.end()) return true;
    // Truth columns written by the generator never act as features.
    if (cfg.input.dgp && (name == "y_full" || name == "mean" || name == "pi")) return true;
    return false;
  };
  const auto candidates = cfg.features.empty() ? ds.column_names() : cfg.features;
  for (const auto& name : candidates) {
    if (!ds.has_column(name)) throw SchemaError("feature '" + name + "' does not exist after preprocessing");
    if (!skip(name)) out.push_back(name);
  }
  return out;
}

}  // namespace selboost::cli
