#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include <torch/torch.h>

#include "advface/face_tensor.hpp"
#include "advface/model.hpp"
#include "advface/rng.hpp"
#include "advface/transforms.hpp"

namespace advface {

enum class AttackMethod { fgsm, pgd, mi_fgsm, random };

std::string_view to_string(AttackMethod m);
AttackMethod parse_attack_method(std::string_view s);

struct AttackConfig {
  /// l-inf bound in [0,1] pixel units.
  double epsilon = 0.1;
  double alpha = 0.1 / 16.0;
  int iterations = 40;
  AttackMethod method = AttackMethod::pgd;
  /// mu for MI-FGSM.
  double momentum_decay = 1.0;
  TransformRanges transform_ranges;
  std::uint64_t seed = 0;

  /// 0 <= epsilon <= 0.2, 0 < alpha <= epsilon (alpha = 0 only with epsilon = 0),
  /// iterations >= 1 and == 1 for fgsm.
  void validate() const;

  /// Defaults for a method: 40 iterations (1 for fgsm, where alpha = epsilon),
  /// alpha = epsilon / 16.
  static AttackConfig defaults(AttackMethod method, double epsilon, int resolution = 64);
};

nlohmann::json attack_config_to_json(const AttackConfig& c);
AttackConfig attack_config_from_json(const nlohmann::json& j);

/// L_{D_A}(theta, x, y_real) for a batch x (N x 3 x H x W); must be differentiable in x.
using DiscriminatorLoss = std::function<torch::Tensor(const torch::Tensor&)>;

/// Binds a frozen model's discriminator for `domain` against the all-ones label grid.
DiscriminatorLoss real_label_objective(DeepfakeModel model, Domain domain = Domain::A);

struct ProtectionResult {
  FaceTensor face;
  /// Loss L(Tr_j(a_adv_j)) at each iterate before stepping, then the loss of the final
  /// iterate under the last sampled transform. Empty for the random method.
  std::vector<double> loss_trace;

  std::optional<double> final_loss() const {
    if (loss_trace.empty()) return std::nullopt;
    return loss_trace.back();
  }
};

/// origin + clip(candidate - origin, -eps, eps), clamped to [0,1].
torch::Tensor project_linf(const torch::Tensor& candidate, const torch::Tensor& origin,
                           double epsilon);
FaceTensor project_linf(const FaceTensor& candidate, const FaceTensor& origin, double epsilon);

/// face + alpha * sign(grad L(Tr(face))), projected. One transform sample from rng.
ProtectionResult fgsm_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                              const AttackConfig& cfg, Rng& rng);

/// Transformation-aware PGD: each iteration samples a fresh transform, takes a signed
/// gradient ascent step and projects onto the eps-ball around `face` and [0,1].
ProtectionResult pgd_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                             const AttackConfig& cfg, Rng& rng);

/// PGD with momentum over L1-normalised gradients: g <- mu g + grad / |grad|_1.
ProtectionResult mi_fgsm_protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                                 const AttackConfig& cfg, Rng& rng);

/// Model- and data-independent baseline: repeated alpha * (random sign) steps, projected.
ProtectionResult random_protect(const FaceTensor& face, const AttackConfig& cfg, Rng& rng);

/// Dispatches on cfg.method. `loss` may be empty only for the random method.
ProtectionResult protect(const DiscriminatorLoss& loss, const FaceTensor& face,
                         const AttackConfig& cfg, Rng& rng);

/// Protects every face with its own substream rng.substream(i).
std::vector<ProtectionResult> protect_faces(const DiscriminatorLoss& loss,
                                            const std::vector<FaceTensor>& faces,
                                            const AttackConfig& cfg, const Rng& rng);

struct EnsembleMember {
  DiscriminatorLoss loss;
  std::string domain_tag;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  /// Face counts per member; must sum to the number of faces.
  std::vector<std::size_t> splits;

  void validate(std::size_t face_count) const;
  /// K near-equal contiguous splits of n faces (earlier members get the remainder).
  static std::vector<std::size_t> equal_splits(std::size_t n, std::size_t k);
};

/// Faces are partitioned contiguously by `splits`; partition k is protected against
/// member k with cfg (method forced to pgd unless cfg selects fgsm/mi_fgsm).
/// Returns faces in the original order.
std::vector<ProtectionResult> ensemble_protect(const EnsembleSpec& spec,
                                               const std::vector<FaceTensor>& faces,
                                               const AttackConfig& cfg, const Rng& rng);

}  // namespace advface
