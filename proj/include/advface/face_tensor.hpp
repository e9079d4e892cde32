#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

namespace advface {

/// An RGB face image with values in [0,1].
///
/// Logically H x W x 3; stored channel-first (3 x H x W) in a floating point
/// torch tensor so it feeds straight into convolution stacks. Batches of faces
/// are plain N x 3 x H x W tensors.
class FaceTensor {
 public:
  FaceTensor() = default;
  /// Takes a 3 x H x W floating tensor. Throws InputError on any other shape.
  explicit FaceTensor(torch::Tensor chw);

  static FaceTensor zeros(int height, int width, torch::Dtype dtype = torch::kFloat32);
  static FaceTensor constant(int height, int width, double value,
                             torch::Dtype dtype = torch::kFloat32);
  /// From interleaved H x W x 3 values.
  static FaceTensor from_hwc(std::span<const float> hwc, int height, int width);

  int height() const { return static_cast<int>(data_.size(1)); }
  int width() const { return static_cast<int>(data_.size(2)); }
  bool defined() const { return data_.defined(); }

  const torch::Tensor& chw() const { return data_; }
  /// 1 x 3 x H x W view for batched operations.
  torch::Tensor batch() const { return data_.unsqueeze(0); }

  std::vector<float> to_hwc() const;
  bool in_unit_range(double tol = 0.0) const;

 private:
  torch::Tensor data_;
};

/// Stack faces into an N x 3 x H x W tensor. All faces must share a shape.
torch::Tensor stack_faces(std::span<const FaceTensor> faces);
std::vector<FaceTensor> unstack_faces(const torch::Tensor& batch);

}  // namespace advface
