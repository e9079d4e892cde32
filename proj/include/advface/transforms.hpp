#pragma once

#include <vector>

#include "json.hpp"
#include <torch/torch.h>

#include "advface/face_tensor.hpp"
#include "advface/rng.hpp"

namespace advface {

/// Sampling ranges for the random differentiable transform Tr(.).
struct TransformRanges {
  double scale_lo = 0.95;
  double scale_hi = 1.05;
  double rotation_deg = 10.0;     // symmetric: [-r, +r]
  double translation_frac = 0.05; // symmetric, fraction of image size
  double warp_amplitude = 2.0;    // pixels
  int warp_grid = 5;

  void validate() const;
  /// Defaults with warp amplitude scaled linearly from 2 px at 64x64.
  static TransformRanges defaults_for(int resolution);
  /// All ranges collapsed so that sampling yields the identity transform.
  static TransformRanges identity(int warp_grid = 5);
};

struct TransformParams {
  double scale = 1.0;
  double rotation_deg = 0.0;
  double translate_x = 0.0;  // fraction of width, positive moves content right
  double translate_y = 0.0;  // fraction of height, positive moves content down
  int warp_grid = 5;
  /// warp_grid x warp_grid x 2 pixel displacements (dx, dy), row-major.
  std::vector<double> warp_offsets;

  static TransformParams identity(int warp_grid = 5);
};

TransformParams sample_params(const TransformRanges& ranges, Rng& rng);

/// Source sampling coordinates (H x W x 2, x then y, in pixels) of the composed
/// resize/affine/remap map, before border clamping.
torch::Tensor sampling_grid(const TransformParams& params, int height, int width);

/// Bilinear resampling of a batch (N x C x H x W) at `grid` with border replication.
/// Differentiable with respect to the batch.
torch::Tensor bilinear_sample(const torch::Tensor& batch, const torch::Tensor& grid);

/// Applies the same transform to every face of the batch.
/// Throws DegenerateTransformError if no sample lands inside the image.
torch::Tensor apply_transform(const torch::Tensor& batch, const TransformParams& params);
FaceTensor apply_transform(const FaceTensor& face, const TransformParams& params);

/// Training-time augmentation: random zoom-in resize, random crop back to size and a
/// smooth random warp. Each face of the batch gets its own draw.
torch::Tensor training_augment(const torch::Tensor& batch, Rng& rng,
                               const TransformRanges& ranges);
FaceTensor training_augment(const FaceTensor& face, Rng& rng);

void to_json(nlohmann::json& j, const TransformRanges& r);
void from_json(const nlohmann::json& j, TransformRanges& r);

}  // namespace advface
