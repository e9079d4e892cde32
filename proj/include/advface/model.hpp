#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "advface/face_tensor.hpp"

namespace advface {

/// Domain A is the target identity (the one being protected), B the source.
enum class Domain { A, B };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

struct LossWeights {
  double adv = 1.0;
  double recon = 10.0;
  double edge = 1.0;
  double cyc = 1.0;
  double perc = 0.1;

  void validate() const;
};

struct ModelConfig {
  int resolution = 64;
  /// 1.0 reproduces the reference widths; 0.5 is the lite attacker.
  double channel_scale = 1.0;
  bool attention_enabled = true;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  /// Use log(1 - D(G(a))) instead of -log D(G(a)) for the generator's adversarial term.
  bool saturating_adversarial = false;

  void validate() const;
  /// Scaled channel count for a reference width. Throws ConfigError if not a positive integer.
  int width(int base) const;
};

/// Per-term generator losses plus the discriminator loss of the same step.
struct LossBreakdown {
  double adv = 0.0;
  double recon = 0.0;
  double edge = 0.0;
  double cyc = 0.0;
  double perc = 0.0;
  double total_G = 0.0;
  double total_D = 0.0;

  static constexpr std::array<std::string_view, 7> kFieldNames = {
      "adv", "recon", "edge", "cyc", "perc", "total_G", "total_D"};
  std::array<double, 7> values() const { return {adv, recon, edge, cyc, perc, total_G, total_D}; }
};

/// h' x w' grid of per-patch "real" probabilities.
struct PatchScores {
  torch::Tensor grid;

  int64_t rows() const { return grid.size(0); }
  int64_t cols() const { return grid.size(1); }
};

// ---------------------------------------------------------------------------
// Layers. Names follow the architecture notation: cXsY-k is a Conv-InstanceNorm-ReLU
// block with an XxX kernel, stride Y and k filters.
// ---------------------------------------------------------------------------

class ConvBlockImpl : public torch::nn::Cloneable<ConvBlockImpl> {
 public:
  ConvBlockImpl(int in_channels, int out_channels, int kernel, int stride, bool norm_relu = true);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};

 private:
  int in_channels_, out_channels_, kernel_, stride_;
  bool norm_relu_;
};
TORCH_MODULE(ConvBlock);

/// SAGAN self-attention: 1x1 query/key/value projections and a learned residual gate
/// initialised to zero.
class SelfAttentionImpl : public torch::nn::Cloneable<SelfAttentionImpl> {
 public:
  explicit SelfAttentionImpl(int channels);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d query{nullptr}, key{nullptr}, value{nullptr};
  torch::Tensor gamma;

 private:
  int channels_;
};
TORCH_MODULE(SelfAttention);

/// up-k: 3x3 conv to 4k channels, ReLU, then 2x pixel shuffle down to k channels.
class UpscaleImpl : public torch::nn::Cloneable<UpscaleImpl> {
 public:
  UpscaleImpl(int in_channels, int out_channels);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};

 private:
  int in_channels_, out_channels_;
};
TORCH_MODULE(Upscale);

class ResidualImpl : public torch::nn::Cloneable<ResidualImpl> {
 public:
  explicit ResidualImpl(int channels);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};

 private:
  int channels_;
};
TORCH_MODULE(Residual);

/// Shared encoder: conv stack down to 4x4, two dense layers, reshape, and one upscale
/// block, ending at 8x8.
class EncoderImpl : public torch::nn::Cloneable<EncoderImpl> {
 public:
  explicit EncoderImpl(ModelConfig config);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential convs{nullptr};
  torch::nn::Linear dense1{nullptr}, dense2{nullptr};
  Upscale upscale{nullptr};

 private:
  ModelConfig config_;
  int bottleneck_channels_ = 0;
};
TORCH_MODULE(Encoder);

/// Per-domain decoder from the 8x8 code to a full-resolution face in (0,1).
class DecoderImpl : public torch::nn::Cloneable<DecoderImpl> {
 public:
  explicit DecoderImpl(ModelConfig config);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential body{nullptr};
  torch::nn::Conv2d to_rgb{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(Decoder);

/// Patch discriminator: c3s2-64, c3s2-128, sa, c3s2-256, sa, c5s1-1. forward() returns
/// logits; sigmoid gives PatchScores. Accepts any input side divisible by 8.
class PatchDiscriminatorImpl : public torch::nn::Cloneable<PatchDiscriminatorImpl> {
 public:
  explicit PatchDiscriminatorImpl(ModelConfig config);
  void reset() override;
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential body{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(PatchDiscriminator);

/// Frozen random-feature CNN for the perceptual loss: three 3x3 conv+ReLU layers
/// (16, 32, 64 channels; strides 1, 2, 2). Weights depend only on the seed.
class PerceptualExtractorImpl : public torch::nn::Cloneable<PerceptualExtractorImpl> {
 public:
  PerceptualExtractorImpl(int resolution, std::uint64_t seed);
  void reset() override;
  std::vector<torch::Tensor> features(const torch::Tensor& x);
  int resolution() const { return resolution_; }

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};

 private:
  int resolution_;
  std::uint64_t seed_;
};
TORCH_MODULE(PerceptualExtractor);

/// Shared encoder, one decoder and one discriminator per domain, and the frozen
/// perceptual extractor.
class DeepfakeModelImpl : public torch::nn::Cloneable<DeepfakeModelImpl> {
 public:
  explicit DeepfakeModelImpl(ModelConfig config);
  void reset() override;

  const ModelConfig& config() const { return config_; }

  Decoder& decoder(Domain d) { return d == Domain::A ? decoder_a : decoder_b; }
  PatchDiscriminator& discriminator(Domain d) { return d == Domain::A ? disc_a : disc_b; }

  /// Batched generation into `target`; differentiable.
  torch::Tensor generate(const torch::Tensor& batch, Domain target);
  /// Batched discriminator logits; differentiable.
  torch::Tensor disc_logits(const torch::Tensor& batch, Domain domain);

  std::vector<torch::Tensor> generator_parameters();
  std::vector<torch::Tensor> discriminator_parameters();
  /// Trainable parameters keyed by layer path (the checkpoint contents).
  std::vector<std::pair<std::string, torch::Tensor>> trainable_named_parameters() const;

  Encoder encoder{nullptr};
  Decoder decoder_a{nullptr}, decoder_b{nullptr};
  PatchDiscriminator disc_a{nullptr}, disc_b{nullptr};
  PerceptualExtractor perceptual{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(DeepfakeModel);

/// Builds and deterministically initialises a model from config.seed.
DeepfakeModel build_model(const ModelConfig& config);

/// Deep copy (parameters are not shared with the original).
DeepfakeModel clone_model(const DeepfakeModel& model);

FaceTensor generate(DeepfakeModel& model, const FaceTensor& face, Domain target_domain);
PatchScores discriminate(DeepfakeModel& model, const FaceTensor& face, Domain domain);

/// Side length of the discriminator's score grid for an input side.
int patch_grid_side(int input_side);

}  // namespace advface
