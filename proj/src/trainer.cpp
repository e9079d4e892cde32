#include "advface/trainer.hpp"

#include "advface/errors.hpp"
#include "advface/losses.hpp"

namespace advface {

namespace {

void check_gradients(const std::vector<torch::Tensor>& params, const char* phase) {
  for (const auto& p : params) {
    if (p.grad().defined() && !torch::isfinite(p.grad()).all().item<bool>()) {
      throw NumericError(std::string("non-finite gradient in ") + phase + " update");
    }
  }
}

void check_batch(const torch::Tensor& batch, int resolution, const char* name) {
  if (batch.dim() != 4 || batch.size(0) == 0 || batch.size(1) != 3 ||
      batch.size(2) != resolution || batch.size(3) != resolution) {
    throw InputError(std::string(name) + " must be a non-empty N x 3 x " +
                     std::to_string(resolution) + " x " + std::to_string(resolution) + " batch");
  }
}

}  // namespace

Trainer::Trainer(DeepfakeModel model, TrainerOptions options)
    : model_(std::move(model)), options_(options) {
  auto adam = torch::optim::AdamOptions(options_.learning_rate)
                  .betas({options_.beta1, options_.beta2});
  gen_opt_ = std::make_unique<torch::optim::Adam>(model_->generator_parameters(), adam);
  disc_opt_ = std::make_unique<torch::optim::Adam>(model_->discriminator_parameters(), adam);
}

LossBreakdown Trainer::step(const torch::Tensor& batch_a, const torch::Tensor& batch_b, Rng& rng) {
  const int res = model_->config().resolution;
  check_batch(batch_a, res, "batch_A");
  check_batch(batch_b, res, "batch_B");
  const auto dtype = model_->encoder->dense1->weight.scalar_type();
  auto real_a = batch_a.to(dtype), real_b = batch_b.to(dtype);
  auto warped_a = training_augment(real_a, rng, options_.augment);
  auto warped_b = training_augment(real_b, rng, options_.augment);

  // Discriminators: real and transformed faces labelled real, generated faces fake.
  torch::Tensor fake_a, fake_b;
  {
    torch::NoGradGuard no_grad;
    fake_a = model_->generate(warped_a, Domain::A);
    fake_b = model_->generate(warped_b, Domain::B);
  }
  disc_opt_->zero_grad();
  auto loss_da = discriminator_loss_from_logits(model_->disc_logits(real_a, Domain::A),
                                                model_->disc_logits(warped_a, Domain::A),
                                                model_->disc_logits(fake_a, Domain::A));
  auto loss_db = discriminator_loss_from_logits(model_->disc_logits(real_b, Domain::B),
                                                model_->disc_logits(warped_b, Domain::B),
                                                model_->disc_logits(fake_b, Domain::B));
  if (!torch::isfinite(loss_da).item<bool>() || !torch::isfinite(loss_db).item<bool>()) {
    throw NumericError("non-finite discriminator loss");
  }
  (loss_da + loss_db).backward();
  check_gradients(model_->discriminator_parameters(), "discriminator");
  disc_opt_->step();

  // Generator: reconstruct each domain from its warped copy, cycle through the other
  // decoder and back.
  gen_opt_->zero_grad();
  const auto& w = model_->config().loss_weights;
  fake_a = model_->generate(warped_a, Domain::A);
  fake_b = model_->generate(warped_b, Domain::B);
  auto cycled_a = model_->generate(model_->generate(real_a, Domain::B), Domain::A);
  auto cycled_b = model_->generate(model_->generate(real_b, Domain::A), Domain::B);
  auto terms_a = generator_terms(model_, Domain::A, real_a, fake_a, cycled_a, w);
  auto terms_b = generator_terms(model_, Domain::B, real_b, fake_b, cycled_b, w);
  (terms_a.total + terms_b.total).backward();
  check_gradients(model_->generator_parameters(), "generator");
  gen_opt_->step();
  // generator backward also deposits gradients on the discriminators; drop them
  disc_opt_->zero_grad();

  ++step_count_;
  LossBreakdown out;
  out.adv = terms_a.adv.item<double>();
  out.recon = terms_a.recon.item<double>();
  out.edge = terms_a.edge.item<double>();
  out.cyc = terms_a.cyc.item<double>();
  out.perc = terms_a.perc.item<double>();
  out.total_G = w.adv * out.adv + w.recon * out.recon + w.edge * out.edge + w.cyc * out.cyc +
                w.perc * out.perc;
  out.total_D = loss_da.item<double>();
  return out;
}

}  // namespace advface
