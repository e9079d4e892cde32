#pragma once

#include <cstdint>
#include <memory>

#include <torch/torch.h>

#include "advface/model.hpp"
#include "advface/rng.hpp"
#include "advface/transforms.hpp"

namespace advface {

struct TrainerOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// Ranges for the attacker-side training augmentation Tr(.).
  TransformRanges augment;
};

/// Optimiser state for the alternating min-max game. Owns one Adam instance for the
/// generator (shared encoder + both decoders) and one for both discriminators.
///
/// Single writer: a Trainer mutates its model's parameters.
class Trainer {
 public:
  Trainer(DeepfakeModel model, TrainerOptions options);

  /// One discriminator update (D_A and D_B) followed by one generator update.
  /// Returns the target-domain (A) generator terms, with total_D = L_{D_A} before the
  /// update. Throws NumericError if a loss or gradient is non-finite.
  LossBreakdown step(const torch::Tensor& batch_a, const torch::Tensor& batch_b, Rng& rng);

  std::int64_t step_count() const { return step_count_; }
  DeepfakeModel& model() { return model_; }
  const TrainerOptions& options() const { return options_; }

 private:
  DeepfakeModel model_;
  TrainerOptions options_;
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> disc_opt_;
  std::int64_t step_count_ = 0;
};

}  // namespace advface
