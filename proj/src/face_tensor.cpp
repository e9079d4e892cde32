#include "advface/face_tensor.hpp"

#include <sstream>

#include "advface/errors.hpp"

namespace advface {

FaceTensor::FaceTensor(torch::Tensor chw) : data_(std::move(chw)) {
  if (!data_.defined() || data_.dim() != 3 || data_.size(0) != 3 ||
      !torch::isFloatingType(data_.scalar_type())) {
    std::ostringstream msg;
    msg << "FaceTensor expects a floating 3 x H x W tensor, got ";
    if (data_.defined()) {
      msg << data_.sizes();
    } else {
      msg << "undefined";
    }
    throw InputError(msg.str());
  }
}

FaceTensor FaceTensor::zeros(int height, int width, torch::Dtype dtype) {
  return FaceTensor(torch::zeros({3, height, width}, torch::TensorOptions().dtype(dtype)));
}

FaceTensor FaceTensor::constant(int height, int width, double value, torch::Dtype dtype) {
  return FaceTensor(torch::full({3, height, width}, value, torch::TensorOptions().dtype(dtype)));
}

FaceTensor FaceTensor::from_hwc(std::span<const float> hwc, int height, int width) {
  if (hwc.size() != static_cast<std::size_t>(height) * width * 3) {
    throw InputError("from_hwc: buffer size does not match H x W x 3");
  }
  auto t = torch::from_blob(const_cast<float*>(hwc.data()), {height, width, 3}, torch::kFloat32)
               .permute({2, 0, 1})
               .contiguous();
  return FaceTensor(t);
}

std::vector<float> FaceTensor::to_hwc() const {
  auto t = data_.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  const float* p = t.data_ptr<float>();
  return std::vector<float>(p, p + t.numel());
}

bool FaceTensor::in_unit_range(double tol) const {
  return data_.min().item<double>() >= -tol && data_.max().item<double>() <= 1.0 + tol;
}

torch::Tensor stack_faces(std::span<const FaceTensor> faces) {
  if (faces.empty()) throw InputError("stack_faces: empty face list");
  std::vector<torch::Tensor> parts;
  parts.reserve(faces.size());
  for (const auto& f : faces) {
    if (f.chw().sizes() != faces.front().chw().sizes()) {
      throw InputError("stack_faces: faces have different shapes");
    }
    parts.push_back(f.chw());
  }
  return torch::stack(parts);
}

std::vector<FaceTensor> unstack_faces(const torch::Tensor& batch) {
  std::vector<FaceTensor> out;
  out.reserve(batch.size(0));
  for (int64_t i = 0; i < batch.size(0); ++i) out.emplace_back(batch[i]);
  return out;
}

}  // namespace advface
