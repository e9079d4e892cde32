#include "advface/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "advface/errors.hpp"

namespace advface {

nlohmann::json default_experiment_config() {
  auto dataset = [](std::uint64_t seed) {
    return nlohmann::json{{"path", ""}, {"synth_seed", seed}, {"count", 64}, {"holdout_fraction", 0.1}};
  };
  return nlohmann::json{
      {"variant", "Original"},
      {"seed", 0},
      {"steps", 300},
      {"pretrain_steps", 300},
      {"pretrain_seed", nullptr},
      {"batch_size", 4},
      {"adversarial_percentage", 100.0},
      {"log_every", 1},
      {"snapshot_every", 50},
      {"target", dataset(1)},
      {"source", dataset(2)},
      {"ensemble_domains", nlohmann::json::array({dataset(3), dataset(4)})},
      {"checkpoint", ""},
      {"pretrained_checkpoint", ""},
      {"model",
       {{"resolution", 32},
        {"channel_scale", 1.0},
        {"lite_scale", 0.5},
        {"attention", true},
        {"saturating_adversarial", false},
        {"learning_rate", 2e-4},
        {"beta1", 0.5},
        {"beta2", 0.999},
        {"loss_weights", {{"adv", 1.0}, {"recon", 10.0}, {"edge", 1.0}, {"cyc", 1.0}, {"perc", 0.1}}}}},
      {"attack",
       {{"method", nullptr},
        {"epsilon", nullptr},
        {"alpha", nullptr},
        {"iterations", nullptr},
        {"momentum_decay", 1.0},
        {"transforms", nullptr}}},
      {"protect", {{"input", ""}}},
      {"eval",
       {{"margin", nullptr},
        {"top_fraction", 0.02},
        {"mask_dir", ""},
        {"spectrum_mode", "luma"},
        {"ati_denominator", "top_count"}}}};
}

void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    auto& slot = base[key];
    // nulls in the defaults are open slots that accept any value
    if (slot.is_object() && value.is_object()) {
      merge_config(slot, value, path);
    } else {
      slot = value;
    }
  }
}

void apply_override(nlohmann::json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (node->is_object()) {
      if (!node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
      node = &(*node)[part];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + part + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("config key '" + key + "': index out of range");
      node = &(*node)[idx];
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object() && !value.is_object()) {
    throw ConfigError("config key '" + key + "' is a section, not a value");
  }
  *node = value;
}

nlohmann::json load_experiment_config(const std::filesystem::path& file,
                                      const std::vector<std::string>& overrides) {
  auto config = default_experiment_config();
  if (!file.empty()) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
    nlohmann::json overlay;
    try {
      overlay = nlohmann::json::parse(read_text_file(file));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("cannot parse " + file.string() + ": " + e.what());
    }
    merge_config(config, overlay);
  }
  for (const auto& o : overrides) apply_override(config, o);
  return config;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace advface
