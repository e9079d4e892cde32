#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "advface/dataset.hpp"
#include "advface/metrics.hpp"
#include "advface/model.hpp"
#include "advface/protection.hpp"
#include "advface/trainer.hpp"

namespace advface {

enum class Variant { original, pgd_01, pgd_005, ensemble, random, lite, lite_ens, lite_random };

/// "Original", "PGD-01", "PGD-005", "Ensemble", "Random", "Lite", "Lite-Ens", "Lite-Random".
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
const std::array<Variant, 8>& all_variants();

struct VariantRecipe {
  Variant variant;
  /// "white-box", "gray-box" or "black-box".
  std::string setting;
  bool pretrain_pair = false;       // pre-train on (target, source)
  bool pretrain_ensemble = false;   // pre-train one model per ensemble domain
  std::optional<AttackMethod> method;
  double epsilon = 0.0;
  bool lite = false;
};

VariantRecipe recipe_for(Variant v);

/// A directory of images, or procedural faces when `path` is empty.
struct DatasetSpec {
  std::string path;
  std::uint64_t synth_seed = 1;
  int count = 64;
  double holdout_fraction = 0.1;
};

FaceDataset materialise(const DatasetSpec& spec, int resolution);

/// Overrides for the variant's default attack. Unset fields keep the variant default.
struct AttackSettings {
  std::optional<AttackMethod> method;
  std::optional<double> epsilon;
  std::optional<double> alpha;
  std::optional<int> iterations;
  double momentum_decay = 1.0;
  std::optional<TransformRanges> transforms;
};

struct ExperimentPlan {
  FaceDataset target;
  FaceDataset source;
  std::vector<FaceDataset> ensemble_domains;
  Variant variant = Variant::original;
  double adversarial_percentage = 100.0;
  int steps = 300;
  int pretrain_steps = 300;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> pretrain_seed;
  int batch_size = 4;
  int log_every = 1;
  int snapshot_every = 50;
  ModelConfig model;
  double lite_scale = 0.5;
  TrainerOptions trainer;
  AttackSettings attack;
  /// The config the plan was built from; hashed into log metadata.
  nlohmann::json config;

  void validate() const;
  VariantRecipe recipe() const { return recipe_for(variant); }
  /// The attacker's model config (channel_scale * lite_scale for Lite variants).
  ModelConfig attacker_config() const;
  /// Model config used for the defender's pre-trained models.
  ModelConfig pretrain_config(std::uint64_t seed) const;
  std::uint64_t effective_pretrain_seed() const { return pretrain_seed.value_or(seed); }
  /// Variant default attack with the overrides applied; nullopt when the variant
  /// does not protect.
  std::optional<AttackConfig> attack_config() const;
};

/// Builds a plan from a full experiment config (see default_experiment_config()).
/// Ensemble domains are only materialised for Ensemble and Lite-Ens.
ExperimentPlan plan_from_config(const nlohmann::json& config);

struct TrainingLog {
  std::vector<std::int64_t> steps;
  std::vector<LossBreakdown> rows;
  nlohmann::json metadata = nlohmann::json::object();
  /// Measured but never exported, so artifacts stay byte-stable.
  double wall_time_seconds = 0.0;

  /// Throws InputError unless `step` exceeds the last logged step.
  void append(std::int64_t step, const LossBreakdown& row);
  std::size_t size() const { return rows.size(); }
  /// Mean of one LossBreakdown field over the last ceil(fraction * size) rows.
  double tail_mean(std::string_view field, double fraction = 0.1) const;
};

struct TrainingOptions {
  int steps = 300;
  int batch_size = 4;
  int log_every = 1;
  int snapshot_every = 50;
  std::uint64_t seed = 0;
  TrainerOptions trainer;
  /// Where `last_good` lands if training diverges.
  std::optional<std::filesystem::path> checkpoint_dir;
};

struct TrainingRun {
  DeepfakeModel model;
  TrainingLog log;
};

/// Trains a fresh model (config.seed initialises weights) on the train splits of
/// `a` (domain A) and `b` (domain B). A non-finite loss aborts with NumericError after
/// saving the last snapshot to checkpoint_dir/last_good when a directory is given.
TrainingRun train_model(const ModelConfig& config, const FaceDataset& a, const FaceDataset& b,
                        const TrainingOptions& options);

/// Pre-trains the defender's model on (target, source); persists
/// checkpoints/final and logs/ under out_dir when given. steps = 0 returns the
/// initialised model.
TrainingRun run_pretrain(const FaceDataset& target, const FaceDataset& source,
                         const ModelConfig& config, int steps, std::uint64_t seed,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                         const TrainingOptions& base = {});

struct RunContext {
  std::optional<std::filesystem::path> out_dir;
  /// Reuse an already trained (target, source) model instead of pre-training.
  std::optional<DeepfakeModel> pretrained;
  /// Reuse pre-trained ensemble members (one per ensemble domain).
  std::vector<DeepfakeModel> ensemble_pretrained;
};

struct VariantResult {
  DeepfakeModel attacker;
  TrainingLog log;
  /// Protected train-split target faces (aligned with target.train_indices), if any.
  std::optional<FaceDataset> protected_faces;
  /// The dataset the attacker trained on as domain A.
  FaceDataset attacker_target;
  std::vector<double> protection_final_losses;
  nlohmann::json provenance;
  /// Models pre-trained along the way, for reuse by later variants.
  std::optional<DeepfakeModel> pretrained;
  std::vector<DeepfakeModel> ensemble_pretrained;
};

VariantResult run_variant(const ExperimentPlan& plan, const RunContext& context = {});

/// loss_log.csv, loss_log.json and one loss_<field>.png per LossBreakdown field.
void export_logs(const TrainingLog& log, const std::filesystem::path& dir);
TrainingLog read_log_csv(const std::filesystem::path& csv);

struct SwapEvaluation {
  std::vector<std::pair<std::string, FaceTensor>> swapped;
  MetricReport report;
};

/// Default AIH margin for a resolution: 20 at 64 px, scaled linearly.
int default_aih_margin(int resolution);

/// Swaps each holdout source face into the target identity (G_A(b)) and scores
/// AIH, plus ATI for faces with a same-stem mask in `masks`.
SwapEvaluation evaluate_swaps(DeepfakeModel& model, const FaceDataset& source,
                              const EvaluationOptions& options,
                              const std::optional<std::filesystem::path>& masks = std::nullopt);

}  // namespace advface
