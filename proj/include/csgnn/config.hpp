#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgnn/metrics.hpp"
#include "csgnn/trainer.hpp"

namespace csgnn {

/// One addressable TrainConfig field.
struct ConfigField {
  std::string name;
  std::string help;
  std::function<std::string(const TrainConfig&)> get;
  /// Parses text into the field; throws ParameterError on bad input.
  std::function<void(TrainConfig&, const std::string&)> set;
};

/// Every TrainConfig field in declaration order.
const std::vector<ConfigField>& config_fields();

/// Sets one field by name. Throws ParameterError for unknown keys.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Applies a flat `key = value` file on top of cfg. Blank lines and lines
/// starting with '#' are ignored. Throws ParseError with the line number.
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);

nlohmann::json config_to_json(const TrainConfig& cfg);
nlohmann::json metrics_to_json(const MetricsReport& m);

std::string action_rule_name(ActionRule r);
std::string optimizer_name(OptimizerKind k);
std::string similarity_name(SimilarityBasis b);

}  // namespace csgnn
