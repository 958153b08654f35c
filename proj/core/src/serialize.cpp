#include "selboost/serialize.hpp"

#include <nlohmann/json.hpp>

#include "selboost/error.hpp"

namespace selboost {
namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j = {{"value", n.value}, {"depth", n.depth}, {"n_rows", n.n_rows}, {"weight", n.weight},
                        {"sse", n.sse}};
    if (n.is_leaf) {
      j["leaf"] = true;
    } else {
      j["leaf"] = false;
      j["feature"] = n.feature;
      j["gain"] = n.gain;
      j["default_left"] = n.default_left;
      j["left"] = n.left;
      j["right"] = n.right;
      if (n.categorical) {
        j["left_levels"] = n.left_levels;
        j["right_levels"] = n.right_levels;
      } else {
        j["threshold"] = n.threshold;
      }
    }
    nodes.push_back(std::move(j));
  }
  return {{"feature_names", tree.feature_names()},
          {"depth_limit", tree.depth_limit()},
          {"min_node", tree.min_node()},
          {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const nlohmann::json& j) {
  return guarded("tree", [&] {
    std::vector<TreeNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      TreeNode n;
      n.is_leaf = jn.at("leaf").get<bool>();
      n.value = jn.at("value").get<double>();
      n.depth = jn.value("depth", 0);
      n.n_rows = jn.value("n_rows", std::size_t{0});
      n.weight = jn.value("weight", 0.0);
      n.sse = jn.value("sse", 0.0);
      if (!n.is_leaf) {
        n.feature = jn.at("feature").get<std::int32_t>();
        n.gain = jn.value("gain", 0.0);
        n.default_left = jn.at("default_left").get<bool>();
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        if (jn.contains("left_levels")) {
          n.categorical = true;
          n.left_levels = jn.at("left_levels").get<std::vector<std::string>>();
          n.right_levels = jn.at("right_levels").get<std::vector<std::string>>();
        } else {
          n.threshold = jn.at("threshold").get<double>();
        }
      }
      nodes.push_back(std::move(n));
    }
    return Tree(j.at("feature_names").get<std::vector<std::string>>(), std::move(nodes),
                j.at("depth_limit").get<int>(), j.at("min_node").get<int>());
  });
}

nlohmann::json boost_config_to_json(const BoostConfig& c) {
  return {{"n_iter", c.n_iter},           {"depth", c.depth},
          {"min_node", c.min_node},       {"shrinkage", c.shrinkage},
          {"bag_fraction", c.bag_fraction}, {"loss", std::string(to_string(c.loss))},
          {"seed", c.seed}};
}

BoostConfig boost_config_from_json(const nlohmann::json& j, const BoostConfig& defaults) {
  return guarded("boost config", [&] {
    BoostConfig c = defaults;
    c.n_iter = j.value("n_iter", c.n_iter);
    c.depth = j.value("depth", c.depth);
    c.min_node = j.value("min_node", c.min_node);
    c.shrinkage = j.value("shrinkage", c.shrinkage);
    c.bag_fraction = j.value("bag_fraction", c.bag_fraction);
    if (j.contains("loss")) c.loss = parse_loss(j.at("loss").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  });
}

nlohmann::json model_to_json(const BoostModel& model) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : model.stages()) stages.push_back({{"beta", s.beta}, {"tree", tree_to_json(s.tree)}});
  return {{"config", boost_config_to_json(model.config())},
          {"features", model.features()},
          {"f0", model.f0()},
          {"stages", std::move(stages)},
          {"importance", model.importance()},
          {"train_loss_path", model.train_loss_path()}};
}

BoostModel model_from_json(const nlohmann::json& j) {
  return guarded("boost model", [&] {
    std::vector<BoostStage> stages;
    for (const auto& js : j.at("stages")) stages.push_back({js.at("beta").get<double>(), tree_from_json(js.at("tree"))});
    return BoostModel(boost_config_from_json(j.at("config")), j.at("features").get<std::vector<std::string>>(),
                      j.at("f0").get<double>(), std::move(stages),
                      j.value("train_loss_path", std::vector<double>{}));
  });
}

nlohmann::json two_step_to_json(const TwoStepModel& model) {
  return {{"step1", model_to_json(model.step1())},
          {"step2", model_to_json(model.step2())},
          {"clip_floor", model.clip_floor()},
          {"pi_as_covariate", model.options().pi_as_covariate},
          {"cross_fit", model.options().cross_fit},
          {"features", model.options().features}};
}

TwoStepModel two_step_from_json(const nlohmann::json& j) {
  return guarded("two-step model", [&] {
    TwoStepOptions opt;
    opt.clip_floor = j.at("clip_floor").get<double>();
    opt.pi_as_covariate = j.value("pi_as_covariate", false);
    opt.cross_fit = j.value("cross_fit", false);
    opt.features = j.value("features", std::vector<std::string>{});
    return TwoStepModel(model_from_json(j.at("step1")), model_from_json(j.at("step2")), {}, {}, {}, opt);
  });
}

nlohmann::json design_spec_to_json(const DesignSpec& spec) {
  return {{"intercept", spec.intercept}, {"columns", spec.columns}, {"levels", spec.levels}};
}

DesignSpec design_spec_from_json(const nlohmann::json& j) {
  return guarded("design spec", [&] {
    DesignSpec spec;
    spec.intercept = j.at("intercept").get<bool>();
    spec.columns = j.at("columns").get<std::vector<std::string>>();
    spec.levels = j.at("levels").get<std::vector<std::vector<std::string>>>();
    if (spec.levels.size() != spec.columns.size()) throw ConfigError("design spec: levels/columns size mismatch");
    return spec;
  });
}

}  // namespace selboost
