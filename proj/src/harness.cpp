#include "advface/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advface/checkpoint.hpp"
#include "advface/config.hpp"
#include "advface/errors.hpp"
#include "advface/image_io.hpp"
#include "advface/plotting.hpp"

namespace advface {

namespace {

constexpr std::uint64_t kProtectStream = 0x70726f74;
constexpr std::uint64_t kMixStream = 0x6d6978;

constexpr std::array<std::string_view, 8> kVariantNames = {
    "Original", "PGD-01", "PGD-005", "Ensemble", "Random", "Lite", "Lite-Ens", "Lite-Random"};

std::string normalise_label(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_') c = '-';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(std::string_view s) {
  const auto wanted = normalise_label(s);
  for (auto v : all_variants()) {
    if (normalise_label(to_string(v)) == wanted) return v;
  }
  throw ConfigError("unknown variant '" + std::string(s) +
                    "' (expected Original, PGD-01, PGD-005, Ensemble, Random, Lite, Lite-Ens or "
                    "Lite-Random)");
}

const std::array<Variant, 8>& all_variants() {
  static const std::array<Variant, 8> all = {Variant::original, Variant::pgd_01,   Variant::pgd_005,
                                             Variant::ensemble, Variant::random,   Variant::lite,
                                             Variant::lite_ens, Variant::lite_random};
  return all;
}

VariantRecipe recipe_for(Variant v) {
  VariantRecipe r;
  r.variant = v;
  switch (v) {
    case Variant::original:
      r.setting = "white-box";
      break;
    case Variant::pgd_01:
    case Variant::pgd_005:
      r.setting = "white-box";
      r.pretrain_pair = true;
      r.method = AttackMethod::pgd;
      r.epsilon = v == Variant::pgd_01 ? 0.1 : 0.05;
      break;
    case Variant::random:
      r.setting = "white-box";
      r.method = AttackMethod::random;
      r.epsilon = 0.1;
      break;
    case Variant::ensemble:
      r.setting = "gray-box";
      r.pretrain_ensemble = true;
      r.method = AttackMethod::pgd;
      r.epsilon = 0.1;
      break;
    case Variant::lite:
      r.setting = "black-box";
      r.lite = true;
      break;
    case Variant::lite_ens:
      r.setting = "black-box";
      r.pretrain_ensemble = true;
      r.method = AttackMethod::pgd;
      r.epsilon = 0.1;
      r.lite = true;
      break;
    case Variant::lite_random:
      r.setting = "black-box";
      r.method = AttackMethod::random;
      r.epsilon = 0.1;
      r.lite = true;
      break;
  }
  return r;
}

FaceDataset materialise(const DatasetSpec& spec, int resolution) {
  FaceDataset ds;
  if (spec.path.empty()) {
    if (spec.count < 2) throw ConfigError("synthetic datasets need count >= 2");
    ds = synth_faces(spec.synth_seed, spec.count, resolution);
  } else {
    ds = load_dataset(spec.path, resolution);
  }
  assign_split(ds, spec.holdout_fraction);
  return ds;
}

// --- ExperimentPlan --------------------------------------------------------

void ExperimentPlan::validate() const {
  model.validate();
  target.validate();
  source.validate();
  const auto rec = recipe();
  if (rec.pretrain_ensemble != !ensemble_domains.empty()) {
    throw ConfigError(rec.pretrain_ensemble
                          ? "variant " + std::string(to_string(variant)) + " needs ensemble domains"
                          : "ensemble domains are only used by Ensemble and Lite-Ens");
  }
  for (const auto* ds : {&target, &source}) {
    if (ds->resolution() != model.resolution) {
      throw ConfigError("dataset '" + ds->identity + "' resolution does not match the model");
    }
  }
  for (const auto& ds : ensemble_domains) {
    ds.validate();
    if (ds.resolution() != model.resolution) {
      throw ConfigError("dataset '" + ds.identity + "' resolution does not match the model");
    }
  }
  if (!(adversarial_percentage >= 0.0 && adversarial_percentage <= 100.0)) {
    throw ConfigError("adversarial_percentage must lie in [0, 100]");
  }
  if (steps < 0 || pretrain_steps < 0) throw ConfigError("step budgets must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (log_every < 1 || snapshot_every < 1) {
    throw ConfigError("log_every and snapshot_every must be >= 1");
  }
  if (!(lite_scale > 0.0 && lite_scale <= 1.0)) throw ConfigError("lite_scale must lie in (0, 1]");
  attacker_config().validate();
  build_model(attacker_config());  // surfaces non-integer channel widths early
  if (rec.method && attack.method) {
    const bool random_recipe = *rec.method == AttackMethod::random;
    if (random_recipe != (*attack.method == AttackMethod::random)) {
      throw ConfigError("variant " + std::string(to_string(variant)) + " cannot use the " +
                        std::string(to_string(*attack.method)) + " method");
    }
  }
  if (auto cfg = attack_config()) cfg->validate();
}

ModelConfig ExperimentPlan::attacker_config() const {
  ModelConfig c = model;
  c.seed = seed;
  if (recipe().lite) c.channel_scale = model.channel_scale * lite_scale;
  return c;
}

ModelConfig ExperimentPlan::pretrain_config(std::uint64_t s) const {
  ModelConfig c = model;
  c.seed = s;
  return c;
}

std::optional<AttackConfig> ExperimentPlan::attack_config() const {
  const auto rec = recipe();
  if (!rec.method) return std::nullopt;
  const auto method = attack.method.value_or(*rec.method);
  auto cfg = AttackConfig::defaults(method, attack.epsilon.value_or(rec.epsilon), model.resolution);
  if (attack.alpha) cfg.alpha = *attack.alpha;
  if (attack.iterations) cfg.iterations = *attack.iterations;
  cfg.momentum_decay = attack.momentum_decay;
  if (attack.transforms) cfg.transform_ranges = *attack.transforms;
  cfg.seed = mix_seed(seed, kProtectStream);
  return cfg;
}

namespace {

DatasetSpec dataset_spec(const nlohmann::json& j, const std::string& key) {
  try {
    DatasetSpec s;
    j.at("path").get_to(s.path);
    j.at("synth_seed").get_to(s.synth_seed);
    j.at("count").get_to(s.count);
    j.at("holdout_fraction").get_to(s.holdout_fraction);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("dataset '" + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentPlan plan_from_config(const nlohmann::json& config) {
  ExperimentPlan plan;
  plan.config = config;
  try {
    plan.variant = parse_variant(config.at("variant").get<std::string>());
    config.at("seed").get_to(plan.seed);
    config.at("steps").get_to(plan.steps);
    config.at("pretrain_steps").get_to(plan.pretrain_steps);
    plan.pretrain_seed = optional_field<std::uint64_t>(config, "pretrain_seed");
    config.at("batch_size").get_to(plan.batch_size);
    config.at("adversarial_percentage").get_to(plan.adversarial_percentage);
    config.at("log_every").get_to(plan.log_every);
    config.at("snapshot_every").get_to(plan.snapshot_every);

    const auto& m = config.at("model");
    m.at("resolution").get_to(plan.model.resolution);
    m.at("channel_scale").get_to(plan.model.channel_scale);
    m.at("attention").get_to(plan.model.attention_enabled);
    m.at("saturating_adversarial").get_to(plan.model.saturating_adversarial);
    m.at("lite_scale").get_to(plan.lite_scale);
    const auto& w = m.at("loss_weights");
    w.at("adv").get_to(plan.model.loss_weights.adv);
    w.at("recon").get_to(plan.model.loss_weights.recon);
    w.at("edge").get_to(plan.model.loss_weights.edge);
    w.at("cyc").get_to(plan.model.loss_weights.cyc);
    w.at("perc").get_to(plan.model.loss_weights.perc);
    plan.model.seed = plan.seed;
    m.at("learning_rate").get_to(plan.trainer.learning_rate);
    m.at("beta1").get_to(plan.trainer.beta1);
    m.at("beta2").get_to(plan.trainer.beta2);

    const auto& a = config.at("attack");
    if (auto method = optional_field<std::string>(a, "method")) {
      plan.attack.method = parse_attack_method(*method);
    }
    plan.attack.epsilon = optional_field<double>(a, "epsilon");
    plan.attack.alpha = optional_field<double>(a, "alpha");
    plan.attack.iterations = optional_field<int>(a, "iterations");
    a.at("momentum_decay").get_to(plan.attack.momentum_decay);
    if (a.contains("transforms") && !a.at("transforms").is_null()) {
      auto ranges = TransformRanges::defaults_for(plan.model.resolution);
      auto merged = nlohmann::json(ranges);
      merge_config(merged, a.at("transforms"), "attack.transforms");
      plan.attack.transforms = merged.get<TransformRanges>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  plan.model.validate();
  plan.trainer.augment = TransformRanges::defaults_for(plan.model.resolution);

  const int res = plan.model.resolution;
  plan.target = materialise(dataset_spec(config.at("target"), "target"), res);
  plan.source = materialise(dataset_spec(config.at("source"), "source"), res);
  if (plan.recipe().pretrain_ensemble) {
    const auto& domains = config.at("ensemble_domains");
    if (!domains.is_array() || domains.empty()) {
      throw ConfigError("variant " + std::string(to_string(plan.variant)) +
                        " needs at least one ensemble domain");
    }
    for (std::size_t k = 0; k < domains.size(); ++k) {
      plan.ensemble_domains.push_back(
          materialise(dataset_spec(domains[k], "ensemble_domains." + std::to_string(k)), res));
    }
  }
  plan.validate();
  return plan;
}

// --- TrainingLog -----------------------------------------------------------

void TrainingLog::append(std::int64_t step, const LossBreakdown& row) {
  if (!steps.empty() && step <= steps.back()) {
    throw InputError("training log steps must be strictly increasing");
  }
  steps.push_back(step);
  rows.push_back(row);
}

double TrainingLog::tail_mean(std::string_view field, double fraction) const {
  const auto& names = LossBreakdown::kFieldNames;
  const auto it = std::find(names.begin(), names.end(), field);
  if (it == names.end()) throw ConfigError("unknown loss field '" + std::string(field) + "'");
  if (rows.empty()) throw InputError("tail_mean of an empty log");
  const auto idx = static_cast<std::size_t>(it - names.begin());
  const auto n = rows.size();
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  double sum = 0.0;
  for (std::size_t i = n - k; i < n; ++i) sum += rows[i].values()[idx];
  return sum / static_cast<double>(k);
}

// --- training --------------------------------------------------------------

namespace {

// Walks shuffled epochs of a fixed index set.
class EpochSampler {
 public:
  EpochSampler(std::vector<std::int64_t> indices, Rng rng)
      : indices_(std::move(indices)), rng_(std::move(rng)), pos_(indices_.size()) {}

  torch::Tensor next(std::size_t count) {
    std::vector<std::int64_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == indices_.size()) {
        for (std::size_t i = indices_.size(); i > 1; --i) {
          std::swap(indices_[i - 1], indices_[rng_.below(i)]);
        }
        pos_ = 0;
      }
      out.push_back(indices_[pos_++]);
    }
    return torch::tensor(out, torch::kLong);
  }

 private:
  std::vector<std::int64_t> indices_;
  Rng rng_;
  std::size_t pos_;
};

void check_training_inputs(const ModelConfig& config, const FaceDataset& a, const FaceDataset& b) {
  for (const auto* ds : {&a, &b}) {
    if (ds->size() == 0 || ds->resolution() != config.resolution) {
      throw ConfigError("dataset '" + ds->identity + "' does not match the model resolution");
    }
    if (ds->train_indices.empty()) {
      throw ConfigError("dataset '" + ds->identity + "' has no training faces");
    }
  }
}

}  // namespace

TrainingRun train_model(const ModelConfig& config, const FaceDataset& a, const FaceDataset& b,
                        const TrainingOptions& options) {
  check_training_inputs(config, a, b);
  if (options.steps < 0 || options.batch_size < 1 || options.log_every < 1 ||
      options.snapshot_every < 1) {
    throw ConfigError("training options out of range");
  }
  TrainingRun run{build_model(config), {}};
  run.log.metadata = {{"model", model_config_to_json(config)},
                      {"steps", options.steps},
                      {"batch_size", options.batch_size},
                      {"log_every", options.log_every},
                      {"seed", options.seed},
                      {"domain_a", a.identity},
                      {"domain_b", b.identity},
                      {"fields", LossBreakdown::kFieldNames}};
  if (options.steps == 0) return run;

  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(run.model, options.trainer);
  const Rng root(options.seed);
  EpochSampler sample_a(a.train_indices, root.substream(1));
  EpochSampler sample_b(b.train_indices, root.substream(2));
  Rng augment_rng = root.substream(3);
  auto last_good = clone_model(run.model);
  std::int64_t last_good_step = 0;
  for (std::int64_t step = 1; step <= options.steps; ++step) {
    const auto batch_a = a.faces.index_select(0, sample_a.next(options.batch_size));
    const auto batch_b = b.faces.index_select(0, sample_b.next(options.batch_size));
    LossBreakdown row;
    try {
      row = trainer.step(batch_a, batch_b, augment_rng);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "training diverged at step " << step << " (" << e.what() << ")";
      if (options.checkpoint_dir) {
        const auto path = *options.checkpoint_dir / "last_good";
        save_checkpoint(last_good, path);
        msg << "; last good checkpoint (step " << last_good_step << ") saved to " << path.string();
      }
      throw NumericError(msg.str());
    }
    if (step % options.log_every == 0 || step == options.steps) run.log.append(step, row);
    if (step % options.snapshot_every == 0) {
      last_good = clone_model(run.model);
      last_good_step = step;
    }
  }
  run.log.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

namespace {

void persist(const TrainingRun& run, const std::filesystem::path& checkpoint,
             const std::filesystem::path& log_dir) {
  save_checkpoint(run.model, checkpoint);
  if (run.log.size() > 0) {
    export_logs(run.log, log_dir);
  } else {
    std::filesystem::create_directories(log_dir);
    write_text_file(log_dir / "loss_log.json",
                    dump_json({{"metadata", run.log.metadata}, {"rows", 0}}));
  }
}

TrainingOptions options_for(const TrainingOptions& base, int steps, std::uint64_t seed,
                            const std::optional<std::filesystem::path>& out_dir) {
  TrainingOptions o = base;
  o.steps = steps;
  o.seed = seed;
  if (out_dir) o.checkpoint_dir = *out_dir / "checkpoints";
  return o;
}

}  // namespace

TrainingRun run_pretrain(const FaceDataset& target, const FaceDataset& source,
                         const ModelConfig& config, int steps, std::uint64_t seed,
                         const std::optional<std::filesystem::path>& out_dir,
                         const TrainingOptions& base) {
  if (target.size() > 0 && source.size() > 0 && target.resolution() != source.resolution()) {
    throw ConfigError("target and source resolutions differ");
  }
  ModelConfig c = config;
  c.seed = seed;
  auto run = train_model(c, target, source, options_for(base, steps, seed, out_dir));
  run.log.metadata["role"] = "pretrain";
  if (out_dir) persist(run, *out_dir / "checkpoints" / "final", *out_dir / "logs" / "pretrain");
  return run;
}

// --- variants --------------------------------------------------------------

namespace {

FaceDataset train_only(const FaceDataset& ds) {
  FaceDataset out;
  out.identity = ds.identity;
  out.faces = ds.train_faces().clone();
  for (auto i : ds.train_indices) out.names.push_back(ds.names[i]);
  for (std::int64_t i = 0; i < out.size(); ++i) out.train_indices.push_back(i);
  return out;
}

void require_compatible(const DeepfakeModel& model, const ModelConfig& expected, const char* what) {
  const auto& c = model->config();
  if (c.resolution != expected.resolution || c.channel_scale != expected.channel_scale ||
      c.attention_enabled != expected.attention_enabled) {
    throw ConfigError(std::string("reused ") + what + " model does not match the plan's model config");
  }
}

}  // namespace

VariantResult run_variant(const ExperimentPlan& plan, const RunContext& context) {
  plan.validate();
  const auto rec = plan.recipe();
  const auto& out = context.out_dir;
  const auto hash = config_hash(plan.config);
  TrainingOptions base;
  base.batch_size = plan.batch_size;
  base.log_every = plan.log_every;
  base.snapshot_every = plan.snapshot_every;
  base.trainer = plan.trainer;

  VariantResult result{build_model(plan.attacker_config()), {}, std::nullopt, {}, {}, {}, {}, {}};
  nlohmann::json stages = nlohmann::json::array();
  const auto pseed = plan.effective_pretrain_seed();

  auto pretrain = [&](const FaceDataset& b, std::uint64_t seed, const std::string& tag) {
    auto run = train_model(plan.pretrain_config(seed), plan.target, b,
                           options_for(base, plan.pretrain_steps, seed, out));
    run.log.metadata["role"] = tag;
    run.log.metadata["variant"] = std::string(to_string(plan.variant));
    run.log.metadata["config_hash"] = hash;
    if (out) persist(run, *out / "checkpoints" / tag, *out / "logs" / tag);
    stages.push_back({{"stage", "pretrain"},
                      {"tag", tag},
                      {"domains", {plan.target.identity, b.identity}},
                      {"steps", plan.pretrain_steps},
                      {"seed", seed},
                      {"reused", false}});
    return run.model;
  };

  if (rec.pretrain_pair) {
    if (context.pretrained) {
      require_compatible(*context.pretrained, plan.pretrain_config(pseed), "pre-trained");
      result.pretrained = *context.pretrained;
      stages.push_back({{"stage", "pretrain"},
                        {"tag", "pretrain"},
                        {"domains", {plan.target.identity, plan.source.identity}},
                        {"steps", plan.pretrain_steps},
                        {"seed", pseed},
                        {"reused", true}});
    } else {
      result.pretrained = pretrain(plan.source, pseed, "pretrain");
    }
  }
  if (rec.pretrain_ensemble) {
    const auto k_count = plan.ensemble_domains.size();
    if (!context.ensemble_pretrained.empty()) {
      if (context.ensemble_pretrained.size() != k_count) {
        throw ConfigError("reused ensemble needs one model per ensemble domain");
      }
      for (std::size_t k = 0; k < k_count; ++k) {
        require_compatible(context.ensemble_pretrained[k], plan.pretrain_config(pseed), "ensemble");
        stages.push_back({{"stage", "pretrain"},
                          {"tag", "pretrain_ens_" + std::to_string(k)},
                          {"domains", {plan.target.identity, plan.ensemble_domains[k].identity}},
                          {"steps", plan.pretrain_steps},
                          {"seed", mix_seed(pseed, k + 1)},
                          {"reused", true}});
      }
      result.ensemble_pretrained = context.ensemble_pretrained;
    } else {
      for (std::size_t k = 0; k < k_count; ++k) {
        result.ensemble_pretrained.push_back(pretrain(plan.ensemble_domains[k], mix_seed(pseed, k + 1),
                                                      "pretrain_ens_" + std::to_string(k)));
      }
    }
  }

  const auto clean = train_only(plan.target);
  result.attacker_target = clean;
  if (rec.method) {
    const auto cfg = *plan.attack_config();
    const auto faces = unstack_faces(clean.faces);
    const Rng rng(cfg.seed);
    std::vector<ProtectionResult> protected_results;
    std::string against = "none";
    if (rec.pretrain_pair) {
      protected_results = protect_faces(real_label_objective(*result.pretrained, Domain::A), faces, cfg, rng);
      against = "pretrain";
    } else if (rec.pretrain_ensemble) {
      EnsembleSpec spec;
      for (std::size_t k = 0; k < result.ensemble_pretrained.size(); ++k) {
        spec.members.push_back({real_label_objective(result.ensemble_pretrained[k], Domain::A),
                                plan.ensemble_domains[k].identity});
      }
      spec.splits = EnsembleSpec::equal_splits(faces.size(), spec.members.size());
      protected_results = ensemble_protect(spec, faces, cfg, rng);
      against = "ensemble";
    } else {
      protected_results = protect_faces({}, faces, cfg, rng);
    }
    std::vector<FaceTensor> adv;
    nlohmann::json per_face = nlohmann::json::array();
    for (std::size_t i = 0; i < protected_results.size(); ++i) {
      adv.push_back(protected_results[i].face);
      const auto final_loss = protected_results[i].final_loss();
      if (final_loss) result.protection_final_losses.push_back(*final_loss);
      per_face.push_back({{"name", clean.names[i]},
                          {"final_loss", final_loss ? nlohmann::json(*final_loss) : nlohmann::json()}});
    }
    FaceDataset prot = clean;
    prot.faces = stack_faces(adv).to(clean.faces.scalar_type());
    if (out) {
      for (std::size_t i = 0; i < adv.size(); ++i) {
        write_protected_png(*out / "protected" / clean.names[i], adv[i], faces[i], cfg.epsilon);
      }
      write_text_file(*out / "protected" / "protection.json",
                      dump_json({{"attack", attack_config_to_json(cfg)},
                                 {"against", against},
                                 {"faces", per_face}}));
    }
    stages.push_back({{"stage", "protect"},
                      {"method", std::string(to_string(cfg.method))},
                      {"epsilon", cfg.epsilon},
                      {"alpha", cfg.alpha},
                      {"iterations", cfg.iterations},
                      {"against", against},
                      {"faces", adv.size()}});
    Rng mix_rng(mix_seed(plan.seed, kMixStream));
    result.attacker_target = mix_adversarial(clean, prot, plan.adversarial_percentage, mix_rng);
    const auto count = static_cast<std::int64_t>(
        std::floor(plan.adversarial_percentage * static_cast<double>(clean.size()) / 100.0 + 1e-9));
    stages.push_back({{"stage", "mix"},
                      {"percentage", plan.adversarial_percentage},
                      {"protected_count", count},
                      {"total", clean.size()}});
    result.protected_faces = std::move(prot);
  }

  const auto attacker_cfg = plan.attacker_config();
  auto run = train_model(attacker_cfg, result.attacker_target, plan.source,
                         options_for(base, plan.steps, plan.seed, out));
  run.log.metadata["role"] = "attacker";
  run.log.metadata["variant"] = std::string(to_string(plan.variant));
  run.log.metadata["config_hash"] = hash;
  stages.push_back({{"stage", "train_attacker"},
                    {"channel_scale", attacker_cfg.channel_scale},
                    {"lite", rec.lite},
                    {"domain_a", rec.method ? "mixed" : "real"},
                    {"steps", plan.steps},
                    {"seed", plan.seed}});
  if (out) persist(run, *out / "checkpoints" / "final", *out / "logs" / "attacker");
  result.attacker = run.model;
  result.log = std::move(run.log);

  result.provenance = {{"variant", std::string(to_string(plan.variant))},
                       {"setting", rec.setting},
                       {"seed", plan.seed},
                       {"config_hash", hash},
                       {"target", plan.target.identity},
                       {"source", plan.source.identity},
                       {"stages", stages},
                       {"config", plan.config}};
  if (out) write_text_file(*out / "provenance.json", dump_json(result.provenance));
  return result;
}

// --- log export ------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_logs(const TrainingLog& log, const std::filesystem::path& dir) {
  if (log.size() == 0) throw InputError("export_logs: empty training log");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream csv;
  csv << "step";
  for (auto f : LossBreakdown::kFieldNames) csv << ',' << f;
  csv << '\n';
  for (std::size_t i = 0; i < log.size(); ++i) {
    csv << log.steps[i];
    for (double v : log.rows[i].values()) csv << ',' << format_double(v);
    csv << '\n';
  }
  write_text_file(dir / "loss_log.csv", csv.str());
  write_text_file(dir / "loss_log.json",
                  dump_json({{"metadata", log.metadata}, {"rows", log.size()}}));
  std::vector<double> xs(log.steps.begin(), log.steps.end());
  for (std::size_t f = 0; f < LossBreakdown::kFieldNames.size(); ++f) {
    Series s{std::string(LossBreakdown::kFieldNames[f]), xs, {}};
    for (const auto& row : log.rows) s.y.push_back(row.values()[f]);
    write_line_plot(dir / ("loss_" + s.label + ".png"), s.label, {s});
  }
}

TrainingLog read_log_csv(const std::filesystem::path& csv) {
  std::istringstream in(read_text_file(csv));
  std::string line;
  std::getline(in, line);
  std::string expected = "step";
  for (auto f : LossBreakdown::kFieldNames) expected += "," + std::string(f);
  if (line != expected) throw InputError("unexpected loss log header in " + csv.string());
  TrainingLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 8) throw InputError("malformed loss log row in " + csv.string());
    LossBreakdown b{cells[1], cells[2], cells[3], cells[4], cells[5], cells[6], cells[7]};
    log.append(static_cast<std::int64_t>(cells[0]), b);
  }
  return log;
}

// --- evaluation ------------------------------------------------------------

int default_aih_margin(int resolution) { return std::max(1, resolution * 20 / 64); }

SwapEvaluation evaluate_swaps(DeepfakeModel& model, const FaceDataset& source,
                              const EvaluationOptions& options,
                              const std::optional<std::filesystem::path>& masks) {
  if (source.holdout_indices.empty()) {
    throw InputError("source dataset '" + source.identity + "' has no holdout faces");
  }
  SwapEvaluation ev;
  std::vector<std::optional<DetectionMask>> mask_values;
  std::vector<std::filesystem::path> mask_files;
  if (masks) {
    if (!std::filesystem::is_directory(*masks)) {
      throw InputError("mask directory not found: " + masks->string());
    }
    mask_files = list_images(*masks);
  }
  for (auto idx : source.holdout_indices) {
    const auto& name = source.names[idx];
    ev.swapped.emplace_back(name, generate(model, source.face(idx), Domain::A));
    std::optional<DetectionMask> mask;
    for (const auto& f : mask_files) {
      if (f.stem() == std::filesystem::path(name).stem()) mask = read_mask(f);
    }
    mask_values.push_back(std::move(mask));
  }
  ev.report = evaluate_faces(ev.swapped, masks ? mask_values : decltype(mask_values){}, options);
  return ev;
}

}  // namespace advface
