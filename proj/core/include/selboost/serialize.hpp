#pragma once

#include <nlohmann/json_fwd.hpp>

#include "selboost/boost.hpp"
#include "selboost/heckman.hpp"
#include "selboost/selection.hpp"
#include "selboost/tree.hpp"

namespace selboost {

// JSON forms of fitted objects. The *_from_json functions throw ConfigError on
// malformed input.

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

nlohmann::json boost_config_to_json(const BoostConfig& config);
/// Missing keys keep the values of `defaults`.
BoostConfig boost_config_from_json(const nlohmann::json& j, const BoostConfig& defaults = {});

/// {config, features, f0, stages[{beta, tree}], importance, train_loss_path}
nlohmann::json model_to_json(const BoostModel& model);
BoostModel model_from_json(const nlohmann::json& j);

/// {step1, step2, clip_floor, pi_as_covariate, features}
nlohmann::json two_step_to_json(const TwoStepModel& model);
TwoStepModel two_step_from_json(const nlohmann::json& j);

nlohmann::json design_spec_to_json(const DesignSpec& spec);
DesignSpec design_spec_from_json(const nlohmann::json& j);

}  // namespace selboost
