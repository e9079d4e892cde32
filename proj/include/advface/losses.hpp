#pragma once

#include <torch/torch.h>

#include "advface/face_tensor.hpp"
#include "advface/model.hpp"

namespace advface {

// Tensor-valued losses are differentiable and used by training and protection.
// The double-valued overloads are the user-facing operations.

/// Mean binary cross-entropy of probabilities against a constant label.
/// log terms are clamped at -100, matching torch's BCE.
torch::Tensor bce_mean(const torch::Tensor& probabilities, double label);
/// Same quantity computed from logits (numerically stable).
torch::Tensor bce_logits_mean(const torch::Tensor& logits, double label);

/// L_{D}: label 1 for real and transformed faces, 0 for generated ones,
/// averaged over all three equally sized grids.
double discriminator_loss(const PatchScores& real, const PatchScores& transformed,
                          const PatchScores& fake);
torch::Tensor discriminator_loss_from_logits(const torch::Tensor& real_logits,
                                             const torch::Tensor& transformed_logits,
                                             const torch::Tensor& fake_logits);

/// L_{D}(theta, x, y_real): BCE of the discriminator's output on x against the
/// all-ones label grid. This is what protection maximises.
torch::Tensor real_label_loss(DeepfakeModel& model, const torch::Tensor& batch, Domain domain);

/// Forward differences along x and y, replicate padding at the far border.
/// Returns N x 2 x C x H x W (dx, dy).
torch::Tensor edge_map(const torch::Tensor& batch);
torch::Tensor edge_loss(const torch::Tensor& real, const torch::Tensor& fake);
double edge_loss(const FaceTensor& real, const FaceTensor& fake);

torch::Tensor perceptual_loss(const torch::Tensor& real, const torch::Tensor& fake,
                              PerceptualExtractor& extractor);
double perceptual_loss(const FaceTensor& real, const FaceTensor& fake,
                       PerceptualExtractor& extractor);

struct GeneratorTerms {
  torch::Tensor adv, recon, edge, cyc, perc, total;
};

/// All five generator terms for faces generated into `domain`.
/// Throws NumericError naming the first non-finite term.
GeneratorTerms generator_terms(DeepfakeModel& model, Domain domain, const torch::Tensor& real,
                               const torch::Tensor& generated, const torch::Tensor& cycled,
                               const LossWeights& weights);

/// Per-term breakdown for one domain. total_D is the discriminator loss on
/// (real, transformed, generated).
LossBreakdown generator_loss(DeepfakeModel& model, const FaceTensor& real,
                             const FaceTensor& transformed, const FaceTensor& generated,
                             const FaceTensor& cycled, const LossWeights& weights,
                             Domain domain = Domain::A);

}  // namespace advface
