#pragma once

#include <filesystem>

#include "json.hpp"

#include "advface/model.hpp"

namespace advface {

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Writes every trainable parameter keyed by layer path, plus the ModelConfig as
/// embedded JSON, into one archive. Output bytes depend only on the model.
void save_checkpoint(const DeepfakeModel& model, const std::filesystem::path& path);

/// Rebuilds the model from the embedded config and loads the parameters.
/// Throws InputError if the archive is missing keys or shapes disagree.
DeepfakeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace advface
