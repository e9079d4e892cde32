#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace advface {

/// Default experiment configuration. Every key a config file or override may set
/// exists here; anything else is rejected.
nlohmann::json default_experiment_config();

/// Merges `overlay` into `base`. Keys missing from `base` throw ConfigError naming
/// the dotted path. Objects merge recursively; arrays and scalars replace.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& prefix = "");

/// Applies one `dotted.path=value` override. The value is parsed as JSON when
/// possible (numbers, booleans, null, quoted strings, arrays) and taken as a bare
/// string otherwise. Array elements are addressed by index (`ensemble_domains.0.count`).
void apply_override(nlohmann::json& config, std::string_view assignment);

/// default_experiment_config() <- file (if non-empty) <- overrides.
nlohmann::json load_experiment_config(const std::filesystem::path& file,
                                      const std::vector<std::string>& overrides);

/// Short stable hash (16 hex digits, FNV-1a 64) of the canonical JSON dump.
std::string config_hash(const nlohmann::json& config);

/// Pretty-printed JSON with a trailing newline; the one serialisation used for every
/// JSON artifact so reruns are byte-identical.
std::string dump_json(const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace advface
