#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tvcache/engine.hpp"

namespace tvc {

/// Parses a JSON scenario. Missing keys take their defaults; unknown keys,
/// wrong types and invalid values throw ConfigError naming the key path.
ScenarioConfig parse_config(std::string_view json_text);

ScenarioConfig load_config_file(const std::string& path);

/// Full JSON form of a config (every key written). parse_config of the result
/// reproduces the config.
std::string config_to_json(const ScenarioConfig& config, int indent = 2);

std::vector<std::string> preset_names();

/// JSON text of a built-in preset; throws ConfigError for an unknown name.
std::string preset_json(const std::string& name);

ScenarioConfig load_preset(const std::string& name);

/// `preset:NAME` loads a built-in preset, anything else is a file path.
ScenarioConfig resolve_config(const std::string& spec);

}  // namespace tvc
