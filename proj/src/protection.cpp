#include "advface/protection.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "advface/errors.hpp"
#include "advface/losses.hpp"

namespace advface {

std::string_view to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::pgd: return "pgd";
    case AttackMethod::mi_fgsm: return "mi_fgsm";
    case AttackMethod::random: return "random";
  }
  return "pgd";
}

AttackMethod parse_attack_method(std::string_view s) {
  if (s == "fgsm") return AttackMethod::fgsm;
  if (s == "pgd") return AttackMethod::pgd;
  if (s == "mi_fgsm" || s == "mifgsm" || s == "miter") return AttackMethod::mi_fgsm;
  if (s == "random") return AttackMethod::random;
  throw ConfigError("unknown attack method '" + std::string(s) +
                    "' (expected fgsm, pgd, mi_fgsm or random)");
}

void AttackConfig::validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 0.2) {
    throw ConfigError("attack epsilon must lie in [0, 0.2]");
  }
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > epsilon + 1e-12 ||
      (epsilon > 0.0 && alpha == 0.0)) {
    throw ConfigError("attack alpha must satisfy 0 < alpha <= epsilon");
  }
  if (iterations < 1) throw ConfigError("attack iterations must be >= 1");
  if (method == AttackMethod::fgsm && iterations != 1) {
    throw ConfigError("fgsm takes exactly one iteration");
  }
  if (!std::isfinite(momentum_decay) || momentum_decay < 0.0) {
    throw ConfigError("momentum_decay must be finite and >= 0");
  }
  transform_ranges.validate();
}

AttackConfig AttackConfig::defaults(AttackMethod method, double epsilon, int resolution) {
  AttackConfig c;
  c.method = method;
  c.epsilon = epsilon;
  c.transform_ranges = TransformRanges::defaults_for(resolution);
  switch (method) {
    case AttackMethod::fgsm:
      c.iterations = 1;
      c.alpha = epsilon;
      break;
    case AttackMethod::random:
      // large steps so the overlapped directions saturate the bound
      c.iterations = 40;
      c.alpha = epsilon;
      break;
    default:
      c.iterations = 40;
      c.alpha = epsilon / 16.0;
      break;
  }
  return c;
}

nlohmann::json attack_config_to_json(const AttackConfig& c) {
  return nlohmann::json{{"epsilon", c.epsilon},
                        {"alpha", c.alpha},
                        {"iterations", c.iterations},
                        {"method", std::string(to_string(c.method))},
                        {"momentum_decay", c.momentum_decay},
                        {"transform_ranges", c.transform_ranges},
                        {"seed", c.seed}};
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
  AttackConfig c;
  try {
    j.at("epsilon").get_to(c.epsilon);
    j.at("alpha").get_to(c.alpha);
    j.at("iterations").get_to(c.iterations);
    c.method = parse_attack_method(j.at("method").get<std::string>());
    j.at("momentum_decay").get_to(c.momentum_decay);
    j.at("transform_ranges").get_to(c.transform_ranges);
    j.at("seed").get_to(c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("attack config: ") + e.what());
  }
  c.validate();
  return c;
}

DiscriminatorLoss real_label_objective(DeepfakeModel model, Domain domain) {
  return [model, domain](const torch::Tensor& batch) mutable {
    return real_label_loss(model, batch, domain);
  };
}

torch::Tensor project_linf(const torch::Tensor& candidate, const torch::Tensor& origin,
                           double epsilon) {
  if (candidate.sizes() != origin.sizes()) throw InputError("project_linf: shape mismatch");
  return (origin + (candidate - origin).clamp(-epsilon, epsilon)).clamp(0.0, 1.0);
}

FaceTensor project_linf(const FaceTensor& candidate, const FaceTensor& origin, double epsilon) {
  return FaceTensor(project_linf(candidate.chw(), origin.chw(), epsilon));
}

namespace {

struct Evaluation {
  double loss;
  torch::Tensor grad;
};

Evaluation loss_and_grad(const DiscriminatorLoss& loss, const torch::Tensor& adv,
                         const TransformParams& params, int iteration) {
  auto x = adv.detach().clone().set_requires_grad(true);
  auto value = loss(apply_transform(x, params));
  auto grad = torch::autograd::grad({value}, {x})[0];
  const double v = value.item<double>();
  if (!std::isfinite(v) || !torch::isfinite(grad).all().item<bool>()) {
    std::ostringstream msg;
    msg << "non-finite discriminator loss gradient at iteration " << iteration;
    throw NumericError(msg.str());
  }
  return {v, grad};
}

double loss_only(const DiscriminatorLoss& loss, const torch::Tensor& adv,
                 const TransformParams& params) {
  torch::NoGradGuard no_grad;
  return loss(apply_transform(adv, params)).item<double>();
}

void require_loss(const DiscriminatorLoss& loss, AttackMethod method) {
  if (!loss) {
    throw ConfigError(std::string(to_string(method)) +
                      " protection needs a discriminator loss (a pre-trained checkpoint)");
  }
}

// Shared sign-gradient loop. momentum < 0 selects plain PGD; otherwise MI-FGSM.
ProtectionResult signed_gradient_loop(const DiscriminatorLoss& loss, const FaceTensor& face,
                                      const AttackConfig& cfg, Rng& rng, int iterations,
                                      double momentum) {
  cfg.validate();
  ProtectionResult result;
  const auto origin = face.batch();
  auto adv = origin.clone();
  torch::Tensor velocity = torch::zeros_like(origin);
  TransformParams params;
  for (int j = 0; j < iterations; ++j) {
    params = sample_params(cfg.transform_ranges, rng);
    auto eval = loss_and_grad(loss, adv, params, j);
    result.loss_trace.push_back(eval.loss);
    torch::Tensor direction;
    if (momentum < 0.0) {
      direction = eval.grad.sign();
    } else {
      const double l1 = eval.grad.abs().sum().item<double>();
      auto normalised = l1 > 0.0 ? eval.grad / l1 : torch::zeros_like(eval.grad);
      velocity = momentum * velocity + normalised;
      direction = velocity.sign();
    }
    adv = project_linf(adv + cfg.alpha * direction, origin, cfg.epsilon);
  }
  result.loss_trace.push_back(loss_only(loss, adv, params));
  result.face = FaceTensor(adv[0]);
  return result;
}

}  // namespace

ProtectionResult fgsm_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                              const AttackConfig& cfg, Rng& rng) {
  require_loss(loss, AttackMethod::fgsm);
  return signed_gradient_loop(loss, face, cfg, rng, 1, -1.0);
}

ProtectionResult pgd_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                             const AttackConfig& cfg, Rng& rng) {
  require_loss(loss, AttackMethod::pgd);
  return signed_gradient_loop(loss, face, cfg, rng, cfg.iterations, -1.0);
}

ProtectionResult mi_fgsm_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                                 const AttackConfig& cfg, Rng& rng) {
  require_loss(loss, AttackMethod::mi_fgsm);
  return signed_gradient_loop(loss, face, cfg, rng, cfg.iterations, cfg.momentum_decay);
}

ProtectionResult random_protect(const FaceTensor& face, const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto origin = face.chw();
  auto gen = rng.torch_generator();
  // Overlap independent random sign directions; every iterate is the projection of the
  // running sum onto the eps-ball and [0,1].
  auto overlap = torch::zeros_like(origin);
  torch::Tensor adv = origin;
  for (int j = 0; j < cfg.iterations; ++j) {
    auto signs = torch::bernoulli(torch::full_like(origin, 0.5), gen) * 2.0 - 1.0;
    overlap = overlap + cfg.alpha * signs;
    adv = project_linf(origin + overlap, origin, cfg.epsilon);
  }
  return ProtectionResult{FaceTensor(adv), {}};
}

ProtectionResult protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                         const AttackConfig& cfg, Rng& rng) {
  switch (cfg.method) {
    case AttackMethod::fgsm: return fgsm_protect(loss, face, cfg, rng);
    case AttackMethod::pgd: return pgd_protect(loss, face, cfg, rng);
    case AttackMethod::mi_fgsm: return mi_fgsm_protect(loss, face, cfg, rng);
    case AttackMethod::random: return random_protect(face, cfg, rng);
  }
  throw ConfigError("unknown attack method");
}

std::vector<ProtectionResult> protect_faces(const DiscriminatorLoss& loss,
                                            const std::vector<FaceTensor>& faces,
                                            const AttackConfig& cfg, const Rng& rng) {
  std::vector<ProtectionResult> out;
  out.reserve(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    Rng stream = rng.substream(i);
    out.push_back(protect(loss, faces[i], cfg, stream));
  }
  return out;
}

void EnsembleSpec::validate(std::size_t face_count) const {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  if (splits.size() != members.size()) {
    throw ConfigError("ensemble needs exactly one split per member");
  }
  const auto total = std::accumulate(splits.begin(), splits.end(), std::size_t{0});
  if (total != face_count) {
    throw ConfigError("ensemble splits sum to " + std::to_string(total) + " but there are " +
                      std::to_string(face_count) + " faces");
  }
  for (const auto& m : members) {
    if (!m.loss) throw ConfigError("ensemble member '" + m.domain_tag + "' has no loss");
  }
}

std::vector<std::size_t> EnsembleSpec::equal_splits(std::size_t n, std::size_t k) {
  if (k == 0) throw ConfigError("ensemble needs at least one member");
  std::vector<std::size_t> out(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++out[i];
  return out;
}

std::vector<ProtectionResult> ensemble_protect(const EnsembleSpec& spec,
                                               const std::vector<FaceTensor>& faces,
                                               const AttackConfig& cfg, const Rng& rng) {
  spec.validate(faces.size());
  if (cfg.method == AttackMethod::random) {
    throw ConfigError("ensemble protection needs a gradient method");
  }
  std::vector<ProtectionResult> out;
  out.reserve(faces.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < spec.members.size(); ++k) {
    for (std::size_t local = 0; local < spec.splits[k]; ++local) {
      Rng stream = rng.substream(local);
      out.push_back(protect(spec.members[k].loss, faces[offset + local], cfg, stream));
    }
    offset += spec.splits[k];
  }
  return out;
}

}  // namespace advface
