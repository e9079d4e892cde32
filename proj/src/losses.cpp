#include "advface/losses.hpp"

#include <cmath>

#include "advface/errors.hpp"

namespace advface {

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) {
    throw NumericError(std::string("non-finite value in ") + what);
  }
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw InputError(std::string(what) + ": shape mismatch");
}

torch::Tensor model_dtype(DeepfakeModel& model, const torch::Tensor& t) {
  return t.to(model->encoder->dense1->weight.scalar_type());
}

}  // namespace

torch::Tensor bce_mean(const torch::Tensor& probabilities, double label) {
  auto log_p = torch::clamp_min(torch::log(probabilities), -100.0);
  auto log_q = torch::clamp_min(torch::log1p(-probabilities), -100.0);
  return -(label * log_p + (1.0 - label) * log_q).mean();
}

torch::Tensor bce_logits_mean(const torch::Tensor& logits, double label) {
  // -[y log s(l) + (1-y) log(1-s(l))] = y softplus(-l) + (1-y) softplus(l)
  return (label * torch::softplus(-logits) + (1.0 - label) * torch::softplus(logits)).mean();
}

double discriminator_loss(const PatchScores& real, const PatchScores& transformed,
                          const PatchScores& fake) {
  require_same_shape(real.grid, transformed.grid, "discriminator_loss");
  require_same_shape(real.grid, fake.grid, "discriminator_loss");
  for (const auto* s : {&real, &transformed, &fake}) {
    if (torch::isnan(s->grid).any().item<bool>()) {
      throw NumericError("discriminator_loss: NaN in patch scores");
    }
  }
  auto loss = (bce_mean(real.grid, 1.0) + bce_mean(transformed.grid, 1.0) +
               bce_mean(fake.grid, 0.0)) /
              3.0;
  return loss.item<double>();
}

torch::Tensor discriminator_loss_from_logits(const torch::Tensor& real_logits,
                                             const torch::Tensor& transformed_logits,
                                             const torch::Tensor& fake_logits) {
  return (bce_logits_mean(real_logits, 1.0) + bce_logits_mean(transformed_logits, 1.0) +
          bce_logits_mean(fake_logits, 0.0)) /
         3.0;
}

torch::Tensor real_label_loss(DeepfakeModel& model, const torch::Tensor& batch, Domain domain) {
  return bce_logits_mean(model->disc_logits(model_dtype(model, batch), domain), 1.0);
}

torch::Tensor edge_map(const torch::Tensor& batch) {
  using namespace torch::indexing;
  auto dx = torch::zeros_like(batch);
  auto dy = torch::zeros_like(batch);
  dx.index_put_({"...", Slice(), Slice(0, -1)},
                batch.index({"...", Slice(), Slice(1, None)}) -
                    batch.index({"...", Slice(), Slice(0, -1)}));
  dy.index_put_({"...", Slice(0, -1), Slice()},
                batch.index({"...", Slice(1, None), Slice()}) -
                    batch.index({"...", Slice(0, -1), Slice()}));
  return torch::stack({dx, dy}, 1);
}

torch::Tensor edge_loss(const torch::Tensor& real, const torch::Tensor& fake) {
  require_same_shape(real, fake, "edge_loss");
  return (edge_map(real) - edge_map(fake)).abs().mean();
}

double edge_loss(const FaceTensor& real, const FaceTensor& fake) {
  return edge_loss(real.batch(), fake.batch()).item<double>();
}

torch::Tensor perceptual_loss(const torch::Tensor& real, const torch::Tensor& fake,
                              PerceptualExtractor& extractor) {
  require_same_shape(real, fake, "perceptual_loss");
  const auto dtype = extractor->conv1->weight.scalar_type();
  auto fr = extractor->features(real.to(dtype));
  auto ff = extractor->features(fake.to(dtype));
  auto total = torch::zeros({}, real.options().dtype(dtype));
  for (std::size_t i = 0; i < fr.size(); ++i) total = total + (fr[i] - ff[i]).pow(2).mean();
  return total;
}

double perceptual_loss(const FaceTensor& real, const FaceTensor& fake,
                       PerceptualExtractor& extractor) {
  return perceptual_loss(real.batch(), fake.batch(), extractor).item<double>();
}

GeneratorTerms generator_terms(DeepfakeModel& model, Domain domain, const torch::Tensor& real,
                               const torch::Tensor& generated, const torch::Tensor& cycled,
                               const LossWeights& weights) {
  require_same_shape(real, generated, "generator_loss");
  require_same_shape(real, cycled, "generator_loss");
  GeneratorTerms t;
  auto logits = model->disc_logits(model_dtype(model, generated), domain);
  if (model->config().saturating_adversarial) {
    // log(1 - D(G)) = -softplus(l)
    t.adv = -torch::softplus(logits).mean();
  } else {
    t.adv = bce_logits_mean(logits, 1.0);
  }
  t.recon = (generated - real).abs().mean();
  t.edge = edge_loss(real, generated);
  t.cyc = (cycled - real).abs().mean();
  t.perc = perceptual_loss(real, generated, model->perceptual);
  require_finite(t.adv, "adversarial loss");
  require_finite(t.recon, "reconstruction loss");
  require_finite(t.edge, "edge loss");
  require_finite(t.cyc, "cyclic loss");
  require_finite(t.perc, "perceptual loss");
  t.total = weights.adv * t.adv + weights.recon * t.recon + weights.edge * t.edge +
            weights.cyc * t.cyc + weights.perc * t.perc;
  return t;
}

LossBreakdown generator_loss(DeepfakeModel& model, const FaceTensor& real,
                             const FaceTensor& transformed, const FaceTensor& generated,
                             const FaceTensor& cycled, const LossWeights& weights, Domain domain) {
  weights.validate();
  torch::NoGradGuard no_grad;
  const auto dtype = model->encoder->dense1->weight.scalar_type();
  auto r = real.batch().to(dtype), tr = transformed.batch().to(dtype),
       g = generated.batch().to(dtype), c = cycled.batch().to(dtype);
  auto terms = generator_terms(model, domain, r, g, c, weights);
  LossBreakdown out;
  out.adv = terms.adv.item<double>();
  out.recon = terms.recon.item<double>();
  out.edge = terms.edge.item<double>();
  out.cyc = terms.cyc.item<double>();
  out.perc = terms.perc.item<double>();
  out.total_G = weights.adv * out.adv + weights.recon * out.recon + weights.edge * out.edge +
                weights.cyc * out.cyc + weights.perc * out.perc;
  out.total_D = discriminator_loss_from_logits(model->disc_logits(r, domain),
                                               model->disc_logits(tr, domain),
                                               model->disc_logits(g, domain))
                    .item<double>();
  return out;
}

}  // namespace advface
