#include "advface/model.hpp"

#include <cmath>
#include <sstream>

#include "advface/errors.hpp"
#include "advface/rng.hpp"

namespace advface {

namespace nn = torch::nn;

std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

Domain parse_domain(std::string_view s) {
  if (s == "A" || s == "a") return Domain::A;
  if (s == "B" || s == "b") return Domain::B;
  throw ConfigError("unknown domain '" + std::string(s) + "' (expected A or B)");
}

void LossWeights::validate() const {
  for (double w : {adv, recon, edge, cyc, perc}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
  if (adv <= 0.0 || recon <= 0.0) throw ConfigError("w_adv and w_recon must be > 0");
}

namespace {

// Reference widths touched by any supported stack.
constexpr int kReferenceWidths[] = {3, 64, 128, 256, 512, 1024};

bool supported_resolution(int r) { return r == 32 || r == 64 || r == 128; }

}  // namespace

void ModelConfig::validate() const {
  if (resolution < 32 || (resolution & (resolution - 1)) != 0 || !supported_resolution(resolution)) {
    throw ConfigError("resolution " + std::to_string(resolution) +
                      " is not supported by the down/upsample stack (use 32, 64 or 128)");
  }
  if (!std::isfinite(channel_scale) || channel_scale <= 0.0) {
    throw ConfigError("channel_scale must be positive");
  }
  for (int base : kReferenceWidths) {
    if (base == 3) continue;
    (void)width(base);
  }
  loss_weights.validate();
}

int ModelConfig::width(int base) const {
  const double scaled = channel_scale * base;
  const double rounded = std::round(scaled);
  if (rounded < 1.0 || std::abs(scaled - rounded) > 1e-9) {
    std::ostringstream msg;
    msg << "channel_scale " << channel_scale << " gives non-integer width for " << base
        << " channels";
    throw ConfigError(msg.str());
  }
  return static_cast<int>(rounded);
}

namespace {

nn::Conv2d make_conv(int in, int out, int kernel, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(kernel / 2));
}

torch::Tensor instance_norm(const torch::Tensor& x) {
  // A 1x1 map normalises to exactly zero; leave it alone.
  if (x.size(2) * x.size(3) <= 1) return x;
  return torch::instance_norm(x, {}, {}, {}, {}, /*use_input_stats=*/true, 0.1, 1e-5,
                              /*cudnn_enabled=*/false);
}

}  // namespace

// --- ConvBlock -------------------------------------------------------------

ConvBlockImpl::ConvBlockImpl(int in_channels, int out_channels, int kernel, int stride,
                             bool norm_relu)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      norm_relu_(norm_relu) {
  reset();
}

void ConvBlockImpl::reset() {
  conv = register_module("conv", make_conv(in_channels_, out_channels_, kernel_, stride_));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
  auto y = conv->forward(x);
  if (!norm_relu_) return y;
  return torch::relu(instance_norm(y));
}

// --- SelfAttention ---------------------------------------------------------

SelfAttentionImpl::SelfAttentionImpl(int channels) : channels_(channels) { reset(); }

void SelfAttentionImpl::reset() {
  const int inner = std::max(1, channels_ / 8);
  query = register_module("query", make_conv(channels_, inner, 1));
  key = register_module("key", make_conv(channels_, inner, 1));
  value = register_module("value", make_conv(channels_, channels_, 1));
  gamma = register_parameter("gamma", torch::zeros({1}));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x) {
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  const auto n = h * w;
  // softmax(q^T k) applied to v, unscaled; the fused kernel avoids materialising n x n
  auto q = query->forward(x).view({b, 1, -1, n}).transpose(2, 3);
  auto k = key->forward(x).view({b, 1, -1, n}).transpose(2, 3);
  auto v = value->forward(x).view({b, 1, c, n}).transpose(2, 3);
  auto out = at::scaled_dot_product_attention(q, k, v, {}, 0.0, false, 1.0)
                 .transpose(2, 3)
                 .reshape({b, c, h, w});
  return gamma * out + x;
}

// --- Upscale ---------------------------------------------------------------

UpscaleImpl::UpscaleImpl(int in_channels, int out_channels)
    : in_channels_(in_channels), out_channels_(out_channels) {
  reset();
}

void UpscaleImpl::reset() {
  conv = register_module("conv", make_conv(in_channels_, 4 * out_channels_, 3));
}

torch::Tensor UpscaleImpl::forward(const torch::Tensor& x) {
  return torch::pixel_shuffle(torch::relu(conv->forward(x)), 2);
}

// --- Residual --------------------------------------------------------------

ResidualImpl::ResidualImpl(int channels) : channels_(channels) { reset(); }

void ResidualImpl::reset() {
  conv1 = register_module("conv1", make_conv(channels_, channels_, 3));
  conv2 = register_module("conv2", make_conv(channels_, channels_, 3));
}

torch::Tensor ResidualImpl::forward(const torch::Tensor& x) {
  auto y = conv2->forward(torch::relu(conv1->forward(x)));
  return torch::relu(y + x);
}

// --- Encoder ---------------------------------------------------------------

namespace {

struct Stage {
  enum Kind { kConv, kAttention, kUpscale, kResidual } kind;
  int base_width;
  int stride = 1;
};

std::vector<Stage> encoder_stages(int resolution) {
  std::vector<Stage> s{{Stage::kConv, 64, 1}};
  if (resolution == 128) s.push_back({Stage::kConv, 64, 2});
  s.push_back({Stage::kConv, 128, 2});
  s.push_back({Stage::kConv, 256, 2});
  s.push_back({Stage::kAttention, 256});
  if (resolution >= 64) {
    s.push_back({Stage::kConv, 512, 2});
    s.push_back({Stage::kAttention, 512});
  }
  s.push_back({Stage::kConv, 1024, 2});
  return s;
}

std::vector<Stage> decoder_stages(int resolution) {
  std::vector<Stage> s;
  if (resolution >= 64) s.push_back({Stage::kUpscale, 256});
  s.push_back({Stage::kUpscale, 128});
  s.push_back({Stage::kAttention, 128});
  s.push_back({Stage::kUpscale, 64});
  if (resolution == 128) s.push_back({Stage::kUpscale, 64});
  s.push_back({Stage::kResidual, 64});
  s.push_back({Stage::kAttention, 64});
  return s;
}

std::string stage_name(std::size_t index, const Stage& st) {
  std::ostringstream name;
  name << index << '_';
  switch (st.kind) {
    case Stage::kConv: name << "c3s" << st.stride << '_' << st.base_width; break;
    case Stage::kAttention: name << "sa_" << st.base_width; break;
    case Stage::kUpscale: name << "up_" << st.base_width; break;
    case Stage::kResidual: name << "r_" << st.base_width; break;
  }
  return name.str();
}

// Appends stages to `seq`; returns the channel count at the end.
int append_stages(nn::Sequential& seq, const std::vector<Stage>& stages, int in_channels,
                  const ModelConfig& config) {
  int channels = in_channels;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& st = stages[i];
    const int w = config.width(st.base_width);
    switch (st.kind) {
      case Stage::kConv:
        seq->push_back(stage_name(i, st), ConvBlock(channels, w, 3, st.stride));
        channels = w;
        break;
      case Stage::kAttention:
        if (config.attention_enabled) seq->push_back(stage_name(i, st), SelfAttention(channels));
        break;
      case Stage::kUpscale:
        seq->push_back(stage_name(i, st), Upscale(channels, w));
        channels = w;
        break;
      case Stage::kResidual:
        seq->push_back(stage_name(i, st), Residual(channels));
        break;
    }
  }
  return channels;
}

}  // namespace

EncoderImpl::EncoderImpl(ModelConfig config) : config_(std::move(config)) { reset(); }

void EncoderImpl::reset() {
  convs = nn::Sequential();
  bottleneck_channels_ = append_stages(convs, encoder_stages(config_.resolution), 3, config_);
  convs = register_module("convs", convs);
  const int flat = 4 * 4 * bottleneck_channels_;
  dense1 = register_module("dense1", nn::Linear(flat, config_.width(1024)));
  dense2 = register_module("dense2", nn::Linear(config_.width(1024), flat));
  upscale = register_module("upscale", Upscale(bottleneck_channels_, config_.width(512)));
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& x) {
  auto h = convs->forward(x);
  h = dense2->forward(dense1->forward(h.flatten(1)));
  h = h.view({x.size(0), bottleneck_channels_, 4, 4});
  return upscale->forward(h);
}

// --- Decoder ---------------------------------------------------------------

DecoderImpl::DecoderImpl(ModelConfig config) : config_(std::move(config)) { reset(); }

void DecoderImpl::reset() {
  body = nn::Sequential();
  const int out = append_stages(body, decoder_stages(config_.resolution), config_.width(512), config_);
  body = register_module("body", body);
  to_rgb = register_module("c5s1_3", make_conv(out, 3, 5));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& x) {
  return torch::sigmoid(to_rgb->forward(body->forward(x)));
}

// --- PatchDiscriminator ----------------------------------------------------

PatchDiscriminatorImpl::PatchDiscriminatorImpl(ModelConfig config) : config_(std::move(config)) {
  reset();
}

void PatchDiscriminatorImpl::reset() {
  body = nn::Sequential();
  const std::vector<Stage> stages{{Stage::kConv, 64, 2},     {Stage::kConv, 128, 2},
                                  {Stage::kAttention, 128},  {Stage::kConv, 256, 2},
                                  {Stage::kAttention, 256}};
  const int channels = append_stages(body, stages, 3, config_);
  body->push_back("5_c5s1_1", make_conv(channels, 1, 5));
  body = register_module("body", body);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  return body->forward(x).squeeze(1);
}

int patch_grid_side(int input_side) { return input_side / 8; }

// --- PerceptualExtractor ---------------------------------------------------

PerceptualExtractorImpl::PerceptualExtractorImpl(int resolution, std::uint64_t seed)
    : resolution_(resolution), seed_(seed) {
  reset();
}

void PerceptualExtractorImpl::reset() {
  conv1 = register_module("conv1", make_conv(3, 16, 3, 1));
  conv2 = register_module("conv2", make_conv(16, 32, 3, 2));
  conv3 = register_module("conv3", make_conv(32, 64, 3, 2));
  torch::NoGradGuard no_grad;
  Rng rng(mix_seed(seed_, 0x70e2c0f1ULL));
  auto gen = rng.torch_generator();
  for (auto& p : parameters()) {
    if (p.dim() > 1) {
      const double fan_in = static_cast<double>(p[0].numel());
      const double bound = std::sqrt(6.0 / fan_in);
      p.uniform_(-bound, bound, gen);
    } else {
      p.zero_();
    }
    p.set_requires_grad(false);
  }
}

std::vector<torch::Tensor> PerceptualExtractorImpl::features(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(2) != resolution_ || x.size(3) != resolution_) {
    throw InputError("perceptual extractor expects " + std::to_string(resolution_) + "x" +
                     std::to_string(resolution_) + " inputs");
  }
  std::vector<torch::Tensor> out;
  auto h = torch::relu(conv1->forward(x));
  out.push_back(h);
  h = torch::relu(conv2->forward(h));
  out.push_back(h);
  h = torch::relu(conv3->forward(h));
  out.push_back(h);
  return out;
}

// --- DeepfakeModel ---------------------------------------------------------

DeepfakeModelImpl::DeepfakeModelImpl(ModelConfig config) : config_(std::move(config)) { reset(); }

void DeepfakeModelImpl::reset() {
  encoder = register_module("encoder", Encoder(config_));
  decoder_a = register_module("decoder_a", Decoder(config_));
  decoder_b = register_module("decoder_b", Decoder(config_));
  disc_a = register_module("disc_a", PatchDiscriminator(config_));
  disc_b = register_module("disc_b", PatchDiscriminator(config_));
  perceptual = register_module("perceptual", PerceptualExtractor(config_.resolution, config_.seed));
}

torch::Tensor DeepfakeModelImpl::generate(const torch::Tensor& batch, Domain target) {
  return decoder(target)->forward(encoder->forward(batch));
}

torch::Tensor DeepfakeModelImpl::disc_logits(const torch::Tensor& batch, Domain domain) {
  return discriminator(domain)->forward(batch);
}

std::vector<torch::Tensor> DeepfakeModelImpl::generator_parameters() {
  std::vector<torch::Tensor> out;
  for (auto* m : std::initializer_list<torch::nn::Module*>{encoder.get(), decoder_a.get(),
                                                           decoder_b.get()}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<torch::Tensor> DeepfakeModelImpl::discriminator_parameters() {
  auto out = disc_a->parameters();
  auto b = disc_b->parameters();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<std::pair<std::string, torch::Tensor>> DeepfakeModelImpl::trainable_named_parameters()
    const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : named_parameters(/*recurse=*/true)) {
    if (item.key().rfind("perceptual.", 0) == 0) continue;
    out.emplace_back(item.key(), item.value());
  }
  return out;
}

DeepfakeModel build_model(const ModelConfig& config) {
  config.validate();
  DeepfakeModel model(config);
  torch::NoGradGuard no_grad;
  Rng rng(config.seed);
  auto gen = rng.torch_generator();
  for (auto& [name, p] : model->trainable_named_parameters()) {
    if (p.dim() > 1) {
      const double fan_in = static_cast<double>(p[0].numel());
      const double bound = std::sqrt(3.0 / fan_in);
      p.uniform_(-bound, bound, gen);
    } else {
      p.zero_();
    }
  }
  return model;
}

// Module::clone renames Sequential children, which would change checkpoint keys;
// rebuild the same structure and copy tensors in registration order instead.
DeepfakeModel clone_model(const DeepfakeModel& model) {
  DeepfakeModel copy(model->config());
  const auto src_params = model->parameters();
  const auto src_buffers = model->buffers();
  if (!src_params.empty()) copy->to(src_params.front().scalar_type());
  torch::NoGradGuard no_grad;
  auto dst_params = copy->parameters();
  auto dst_buffers = copy->buffers();
  for (std::size_t i = 0; i < dst_params.size(); ++i) dst_params[i].copy_(src_params[i]);
  for (std::size_t i = 0; i < dst_buffers.size(); ++i) dst_buffers[i].copy_(src_buffers[i]);
  copy->train(model->is_training());
  return copy;
}

namespace {

void check_face_resolution(const DeepfakeModel& model, const FaceTensor& face) {
  const int r = model->config().resolution;
  if (face.height() != r || face.width() != r) {
    throw InputError("face is " + std::to_string(face.height()) + "x" +
                     std::to_string(face.width()) + ", model expects " + std::to_string(r) + "x" +
                     std::to_string(r));
  }
}

torch::Tensor match_dtype(DeepfakeModel& model, const torch::Tensor& t) {
  return t.to(model->encoder->dense1->weight.scalar_type());
}

}  // namespace

FaceTensor generate(DeepfakeModel& model, const FaceTensor& face, Domain target_domain) {
  check_face_resolution(model, face);
  torch::NoGradGuard no_grad;
  auto out = model->generate(match_dtype(model, face.batch()), target_domain);
  return FaceTensor(out[0].contiguous());
}

PatchScores discriminate(DeepfakeModel& model, const FaceTensor& face, Domain domain) {
  check_face_resolution(model, face);
  torch::NoGradGuard no_grad;
  auto logits = model->disc_logits(match_dtype(model, face.batch()), domain);
  return PatchScores{torch::sigmoid(logits[0]).contiguous()};
}

}  // namespace advface
