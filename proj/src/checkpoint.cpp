#include "advface/checkpoint.hpp"

#include "advface/errors.hpp"

namespace advface {

namespace {
constexpr const char* kConfigKey = "model_config_json";
constexpr const char* kFormatKey = "advface_checkpoint_version";
}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"resolution", c.resolution},
                        {"channel_scale", c.channel_scale},
                        {"attention_enabled", c.attention_enabled},
                        {"seed", c.seed},
                        {"saturating_adversarial", c.saturating_adversarial},
                        {"loss_weights",
                         {{"adv", c.loss_weights.adv},
                          {"recon", c.loss_weights.recon},
                          {"edge", c.loss_weights.edge},
                          {"cyc", c.loss_weights.cyc},
                          {"perc", c.loss_weights.perc}}}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    j.at("resolution").get_to(c.resolution);
    j.at("channel_scale").get_to(c.channel_scale);
    j.at("attention_enabled").get_to(c.attention_enabled);
    j.at("seed").get_to(c.seed);
    if (j.contains("saturating_adversarial")) {
      j.at("saturating_adversarial").get_to(c.saturating_adversarial);
    }
    const auto& w = j.at("loss_weights");
    w.at("adv").get_to(c.loss_weights.adv);
    w.at("recon").get_to(c.loss_weights.recon);
    w.at("edge").get_to(c.loss_weights.edge);
    w.at("cyc").get_to(c.loss_weights.cyc);
    w.at("perc").get_to(c.loss_weights.perc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_checkpoint(const DeepfakeModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  archive.write(kFormatKey, c10::IValue(static_cast<int64_t>(1)));
  archive.write(kConfigKey, c10::IValue(model_config_to_json(model->config()).dump()));
  for (const auto& [name, tensor] : model->trainable_named_parameters()) {
    archive.write(name, tensor.detach().to(torch::kFloat32).contiguous());
  }
  archive.save_to(path.string());
}

DeepfakeModel load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InputError("checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw InputError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  c10::IValue config_value;
  if (!archive.try_read(kConfigKey, config_value) || !config_value.isString()) {
    throw InputError("checkpoint " + path.string() + " has no embedded model config");
  }
  auto config = model_config_from_json(nlohmann::json::parse(config_value.toStringRef()));
  DeepfakeModel model(config);
  torch::NoGradGuard no_grad;
  for (auto& [name, param] : model->trainable_named_parameters()) {
    torch::Tensor stored;
    if (!archive.try_read(name, stored)) {
      throw InputError("checkpoint is missing parameter '" + name + "'");
    }
    if (stored.sizes() != param.sizes()) {
      throw InputError("checkpoint parameter '" + name + "' has the wrong shape");
    }
    param.copy_(stored);
  }
  return model;
}

}  // namespace advface
