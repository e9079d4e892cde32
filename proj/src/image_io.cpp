#include "advface/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "advface/errors.hpp"

namespace advface {

namespace {

const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

double depth_max(int depth) { return depth == CV_16U ? 65535.0 : 255.0; }

cv::Mat to_rgb_float(const cv::Mat& raw, const std::filesystem::path& path) {
  cv::Mat rgb;
  switch (raw.channels()) {
    case 1: cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw InputError("unsupported channel count in " + path.string());
  }
  cv::Mat f;
  rgb.convertTo(f, CV_32F, 1.0 / depth_max(raw.depth()));
  return f;
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

void write_png(const std::filesystem::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  if (!cv::imwrite(path.string(), mat, kPngParams)) {
    throw InputError("cannot write " + path.string());
  }
}

}  // namespace

FaceTensor read_face(const std::filesystem::path& path) {
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    raw = cv::Mat();
  }
  if (raw.empty()) throw InputError("cannot decode image " + path.string());
  if (raw.depth() != CV_8U && raw.depth() != CV_16U) {
    throw InputError("unsupported bit depth in " + path.string());
  }
  cv::Mat f = to_rgb_float(raw, path);
  auto t = torch::from_blob(f.data, {f.rows, f.cols, 3}, torch::kFloat32)
               .permute({2, 0, 1})
               .contiguous();
  return FaceTensor(t);
}

FaceTensor center_resize(const FaceTensor& face, int resolution) {
  if (face.height() == resolution && face.width() == resolution) return face;
  const int side = std::min(face.height(), face.width());
  const int top = (face.height() - side) / 2, left = (face.width() - side) / 2;
  auto hwc = face.chw().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  cv::Mat m(face.height(), face.width(), CV_32FC3, hwc.data_ptr<float>());
  cv::Mat cropped = m(cv::Rect(left, top, side, side));
  cv::Mat resized;
  const int interp = side > resolution ? cv::INTER_AREA : cv::INTER_LINEAR;
  cv::resize(cropped, resized, cv::Size(resolution, resolution), 0, 0, interp);
  auto t = torch::from_blob(resized.data, {resolution, resolution, 3}, torch::kFloat32)
               .permute({2, 0, 1})
               .clamp(0.0, 1.0)
               .contiguous();
  return FaceTensor(t);
}

namespace {

cv::Mat quantise(const torch::Tensor& chw, int bit_depth) {
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  auto codes = (chw.to(torch::kFloat64).clamp(0.0, 1.0) * scale).round();
  auto hwc = codes.permute({1, 2, 0}).contiguous();
  const int h = static_cast<int>(hwc.size(0)), w = static_cast<int>(hwc.size(1));
  cv::Mat rgb(h, w, bit_depth == 16 ? CV_16UC3 : CV_8UC3);
  auto acc = hwc.accessor<double, 3>();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        // OpenCV stores BGR
        if (bit_depth == 16) {
          rgb.at<cv::Vec3w>(y, x)[2 - c] = static_cast<uint16_t>(acc[y][x][c]);
        } else {
          rgb.at<cv::Vec3b>(y, x)[2 - c] = static_cast<uint8_t>(acc[y][x][c]);
        }
      }
    }
  }
  return rgb;
}

void check_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InputError("PNG bit depth must be 8 or 16");
}

}  // namespace

void write_face_png(const std::filesystem::path& path, const FaceTensor& face, int bit_depth) {
  check_depth(bit_depth);
  write_png(path, quantise(face.chw(), bit_depth));
}

namespace {

// Picks, per value, the code nearest to `value` whose level stays within eps of
// `origin` and inside [0, scale]. Returns nullopt if some pixel has no such code.
std::optional<torch::Tensor> bounded_codes(const torch::Tensor& value, const torch::Tensor& origin,
                                           double epsilon, double scale) {
  constexpr double kTol = 1e-6;
  auto v = value.to(torch::kFloat64).clamp(0.0, 1.0);
  auto o = origin.to(torch::kFloat64);
  auto lo = torch::clamp_min(o - epsilon - kTol, 0.0);
  auto hi = torch::clamp_max(o + epsilon + kTol, 1.0);
  auto lo_code = (lo * scale).ceil();
  auto hi_code = (hi * scale).floor();
  if ((lo_code > hi_code).any().item<bool>()) return std::nullopt;
  return torch::minimum(torch::maximum((v * scale).round(), lo_code), hi_code);
}

}  // namespace

int write_protected_png(const std::filesystem::path& path, const FaceTensor& protected_face,
                        const FaceTensor& original, double epsilon, int bit_depth) {
  check_depth(bit_depth);
  if (protected_face.chw().sizes() != original.chw().sizes()) {
    throw InputError("write_protected_png: protected and original faces differ in shape");
  }
  for (int depth : {bit_depth, 16}) {
    const double scale = depth == 16 ? 65535.0 : 255.0;
    auto codes = bounded_codes(protected_face.chw(), original.chw(), epsilon, scale);
    if (!codes) continue;
    write_png(path, quantise(*codes / scale, depth));
    return depth;
  }
  throw NumericError("cannot quantise " + path.string() + " within epsilon of the original");
}

DetectionMask read_mask(const std::filesystem::path& path) {
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  } catch (const cv::Exception&) {
    raw = cv::Mat();
  }
  if (raw.empty()) throw InputError("cannot decode mask " + path.string());
  if (raw.depth() != CV_8U && raw.depth() != CV_16U) {
    throw InputError("unsupported mask bit depth in " + path.string());
  }
  cv::Mat f;
  raw.convertTo(f, CV_64F, 1.0 / depth_max(raw.depth()));
  auto t = torch::from_blob(f.data, {f.rows, f.cols}, torch::kFloat64).clone();
  return DetectionMask{t, path.string()};
}

void write_mask_png(const std::filesystem::path& path, const DetectionMask& mask) {
  write_grey_png(path, (mask.values.to(torch::kFloat64).clamp(0.0, 1.0) * 255.0).round());
}

void write_grey_png(const std::filesystem::path& path, const torch::Tensor& values) {
  auto v = values.to(torch::kFloat64).clamp(0.0, 255.0).round().to(torch::kUInt8).contiguous();
  cv::Mat m(static_cast<int>(v.size(0)), static_cast<int>(v.size(1)), CV_8UC1, v.data_ptr<uint8_t>());
  write_png(path, m.clone());
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  static const std::vector<std::string> kExt = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (std::find(kExt.begin(), kExt.end(), ext) != kExt.end()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return out;
}

}  // namespace advface
