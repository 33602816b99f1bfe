#pragma once

#include <json.hpp>

#include "tadkit/model.hpp"

// Internal JSON bridges shared by checkpoint and run-config code.
namespace tadkit {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace tadkit
