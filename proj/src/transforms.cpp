#include "advface/transforms.hpp"

#include <cmath>
#include <numbers>

#include "advface/errors.hpp"

namespace advface {

void TransformRanges::validate() const {
  for (double v : {scale_lo, scale_hi, rotation_deg, translation_frac, warp_amplitude}) {
    if (!std::isfinite(v)) throw ConfigError("transform ranges must be finite");
  }
  if (scale_lo <= 0.0 || scale_lo > scale_hi) {
    throw ConfigError("transform scale range must satisfy 0 < lo <= hi");
  }
  if (rotation_deg < 0.0 || translation_frac < 0.0 || warp_amplitude < 0.0) {
    throw ConfigError("rotation, translation and warp amplitude bounds must be >= 0");
  }
  if (warp_grid < 2) throw ConfigError("warp_grid must be >= 2");
}

TransformRanges TransformRanges::defaults_for(int resolution) {
  TransformRanges r;
  r.warp_amplitude = 2.0 * resolution / 64.0;
  return r;
}

TransformRanges TransformRanges::identity(int warp_grid) {
  TransformRanges r;
  r.scale_lo = r.scale_hi = 1.0;
  r.rotation_deg = 0.0;
  r.translation_frac = 0.0;
  r.warp_amplitude = 0.0;
  r.warp_grid = warp_grid;
  return r;
}

TransformParams TransformParams::identity(int warp_grid) {
  TransformParams p;
  p.warp_grid = warp_grid;
  p.warp_offsets.assign(static_cast<std::size_t>(warp_grid) * warp_grid * 2, 0.0);
  return p;
}

TransformParams sample_params(const TransformRanges& ranges, Rng& rng) {
  ranges.validate();
  TransformParams p;
  p.scale = rng.uniform(ranges.scale_lo, ranges.scale_hi);
  p.rotation_deg = rng.uniform(-ranges.rotation_deg, ranges.rotation_deg);
  p.translate_x = rng.uniform(-ranges.translation_frac, ranges.translation_frac);
  p.translate_y = rng.uniform(-ranges.translation_frac, ranges.translation_frac);
  p.warp_grid = ranges.warp_grid;
  p.warp_offsets.resize(static_cast<std::size_t>(ranges.warp_grid) * ranges.warp_grid * 2);
  for (auto& v : p.warp_offsets) v = rng.uniform(-ranges.warp_amplitude, ranges.warp_amplitude);
  return p;
}

namespace {

// Bilinear interpolation of the control-point offset field at pixel (x, y).
std::pair<double, double> warp_offset_at(const TransformParams& p, double x, double y, int height,
                                         int width) {
  const int g = p.warp_grid;
  const double gx = width > 1 ? x * (g - 1) / (width - 1) : 0.0;
  const double gy = height > 1 ? y * (g - 1) / (height - 1) : 0.0;
  const int x0 = std::min(static_cast<int>(std::floor(gx)), g - 2);
  const int y0 = std::min(static_cast<int>(std::floor(gy)), g - 2);
  const double fx = gx - x0, fy = gy - y0;
  auto at = [&](int yy, int xx, int c) {
    return p.warp_offsets[(static_cast<std::size_t>(yy) * g + xx) * 2 + c];
  };
  double out[2];
  for (int c = 0; c < 2; ++c) {
    const double top = (1 - fx) * at(y0, x0, c) + fx * at(y0, x0 + 1, c);
    const double bottom = (1 - fx) * at(y0 + 1, x0, c) + fx * at(y0 + 1, x0 + 1, c);
    out[c] = (1 - fy) * top + fy * bottom;
  }
  return {out[0], out[1]};
}

}  // namespace

torch::Tensor sampling_grid(const TransformParams& params, int height, int width) {
  if (params.warp_grid < 2 ||
      params.warp_offsets.size() != static_cast<std::size_t>(params.warp_grid) * params.warp_grid * 2) {
    throw InputError("transform params: warp_offsets does not match warp_grid");
  }
  if (!(params.scale > 0.0)) throw InputError("transform params: scale must be > 0");
  const bool has_warp =
      std::any_of(params.warp_offsets.begin(), params.warp_offsets.end(), [](double v) { return v != 0.0; });
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double tx = params.translate_x * width, ty = params.translate_y * height;

  auto grid = torch::empty({height, width, 2}, torch::kFloat64);
  auto acc = grid.accessor<double, 3>();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double px = x, py = y;
      if (has_warp) {
        auto [dx, dy] = warp_offset_at(params, x, y, height, width);
        px += dx;
        py += dy;
      }
      // inverse rotation/translation about the centre, then inverse zoom
      const double ux = px - cx - tx, uy = py - cy - ty;
      const double rx = cos_t * ux + sin_t * uy;
      const double ry = -sin_t * ux + cos_t * uy;
      acc[y][x][0] = cx + rx / params.scale;
      acc[y][x][1] = cy + ry / params.scale;
    }
  }
  return grid;
}

torch::Tensor bilinear_sample(const torch::Tensor& batch, const torch::Tensor& grid) {
  const int64_t n = batch.size(0), c = batch.size(1), h = batch.size(2), w = batch.size(3);
  const int64_t oh = grid.size(0), ow = grid.size(1);
  auto gx = grid.select(2, 0).clamp(0.0, static_cast<double>(w - 1)).reshape({-1});
  auto gy = grid.select(2, 1).clamp(0.0, static_cast<double>(h - 1)).reshape({-1});
  auto x0 = gx.floor().clamp_max(std::max<int64_t>(w - 2, 0));
  auto y0 = gy.floor().clamp_max(std::max<int64_t>(h - 2, 0));
  auto wx = (gx - x0).to(batch.scalar_type());
  auto wy = (gy - y0).to(batch.scalar_type());
  auto x0i = x0.to(torch::kLong), y0i = y0.to(torch::kLong);
  auto x1i = (x0i + 1).clamp_max(w - 1), y1i = (y0i + 1).clamp_max(h - 1);

  auto flat = batch.reshape({n, c, h * w});
  auto gather = [&](const torch::Tensor& yi, const torch::Tensor& xi) {
    return flat.index_select(2, yi * w + xi);
  };
  auto out = gather(y0i, x0i) * ((1 - wx) * (1 - wy)) + gather(y0i, x1i) * (wx * (1 - wy)) +
             gather(y1i, x0i) * ((1 - wx) * wy) + gather(y1i, x1i) * (wx * wy);
  return out.reshape({n, c, oh, ow});
}

torch::Tensor apply_transform(const torch::Tensor& batch, const TransformParams& params) {
  if (batch.dim() != 4) throw InputError("apply_transform expects an N x C x H x W batch");
  const int h = static_cast<int>(batch.size(2)), w = static_cast<int>(batch.size(3));
  auto grid = sampling_grid(params, h, w);
  auto gx = grid.select(2, 0), gy = grid.select(2, 1);
  const bool any_inside =
      ((gx >= 0.0) & (gx <= w - 1.0) & (gy >= 0.0) & (gy <= h - 1.0)).any().item<bool>();
  if (!any_inside) {
    throw DegenerateTransformError("transform maps every sample outside the image");
  }
  return bilinear_sample(batch, grid);
}

FaceTensor apply_transform(const FaceTensor& face, const TransformParams& params) {
  return FaceTensor(apply_transform(face.batch(), params)[0]);
}

namespace {

TransformParams sample_augment_params(const TransformRanges& ranges, int height, int width,
                                      Rng& rng) {
  TransformParams p = TransformParams::identity(ranges.warp_grid);
  // zoom in only, then crop a random window of the enlarged image
  const double zoom = 1.0 + std::abs(rng.uniform(ranges.scale_lo, ranges.scale_hi) - 1.0);
  p.scale = zoom;
  const double margin_x = (width - width / zoom) / 2.0;
  const double margin_y = (height - height / zoom) / 2.0;
  const double off_x = rng.uniform(-margin_x, margin_x);
  const double off_y = rng.uniform(-margin_y, margin_y);
  p.translate_x = -off_x * zoom / width;
  p.translate_y = -off_y * zoom / height;
  for (auto& v : p.warp_offsets) v = rng.uniform(-ranges.warp_amplitude, ranges.warp_amplitude);
  return p;
}

}  // namespace

torch::Tensor training_augment(const torch::Tensor& batch, Rng& rng,
                               const TransformRanges& ranges) {
  ranges.validate();
  const int h = static_cast<int>(batch.size(2)), w = static_cast<int>(batch.size(3));
  std::vector<torch::Tensor> out;
  out.reserve(batch.size(0));
  for (int64_t i = 0; i < batch.size(0); ++i) {
    auto p = sample_augment_params(ranges, h, w, rng);
    out.push_back(bilinear_sample(batch.slice(0, i, i + 1), sampling_grid(p, h, w)));
  }
  return torch::cat(out, 0).clamp(0.0, 1.0);
}

FaceTensor training_augment(const FaceTensor& face, Rng& rng) {
  return FaceTensor(
      training_augment(face.batch(), rng, TransformRanges::defaults_for(face.height()))[0]);
}

void to_json(nlohmann::json& j, const TransformRanges& r) {
  j = nlohmann::json{{"scale_lo", r.scale_lo},
                     {"scale_hi", r.scale_hi},
                     {"rotation_deg", r.rotation_deg},
                     {"translation_frac", r.translation_frac},
                     {"warp_amplitude", r.warp_amplitude},
                     {"warp_grid", r.warp_grid}};
}

void from_json(const nlohmann::json& j, TransformRanges& r) {
  j.at("scale_lo").get_to(r.scale_lo);
  j.at("scale_hi").get_to(r.scale_hi);
  j.at("rotation_deg").get_to(r.rotation_deg);
  j.at("translation_frac").get_to(r.translation_frac);
  j.at("warp_amplitude").get_to(r.warp_amplitude);
  j.at("warp_grid").get_to(r.warp_grid);
  r.validate();
}

}  // namespace advface
