#include "advface/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "advface/errors.hpp"
#include "advface/image_io.hpp"

namespace advface {

namespace {

torch::Tensor select_rows(const torch::Tensor& faces, const std::vector<std::int64_t>& idx) {
  if (idx.empty()) return faces.slice(0, 0, 0);
  return faces.index_select(0, torch::tensor(idx, torch::kLong));
}

}  // namespace

torch::Tensor FaceDataset::train_faces() const { return select_rows(faces, train_indices); }
torch::Tensor FaceDataset::holdout_faces() const { return select_rows(faces, holdout_indices); }

void FaceDataset::validate() const {
  if (size() < 2) throw ConfigError("dataset '" + identity + "' needs at least 2 faces");
  if (faces.dim() != 4 || faces.size(1) != 3 || faces.size(2) != faces.size(3)) {
    throw ConfigError("dataset '" + identity + "' faces must be N x 3 x R x R");
  }
  if (static_cast<std::int64_t>(names.size()) != size()) {
    throw ConfigError("dataset '" + identity + "' names do not match face count");
  }
  std::set<std::int64_t> seen;
  for (auto i : train_indices) seen.insert(i);
  for (auto i : holdout_indices) {
    if (seen.count(i)) throw ConfigError("dataset '" + identity + "' split overlaps");
    seen.insert(i);
  }
  if (static_cast<std::int64_t>(seen.size()) != size() || *seen.begin() != 0 ||
      *seen.rbegin() != size() - 1) {
    throw ConfigError("dataset '" + identity + "' split is not exhaustive");
  }
}

void assign_default_split(FaceDataset& dataset) { assign_split(dataset, 0.1); }

void assign_split(FaceDataset& dataset, double holdout_fraction) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
  const auto n = dataset.size();
  std::int64_t holdout = 0;
  if (holdout_fraction > 0.0) {
    holdout = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(holdout_fraction * static_cast<double>(n) + 1e-9)));
  }
  if (holdout >= n) throw ConfigError("dataset '" + dataset.identity + "' has no faces left to train on");
  dataset.train_indices.clear();
  dataset.holdout_indices.clear();
  for (std::int64_t i = 0; i < n; ++i) {
    (i < n - holdout ? dataset.train_indices : dataset.holdout_indices).push_back(i);
  }
}

FaceDataset load_dataset(const std::filesystem::path& dir, int resolution) {
  if (!std::filesystem::is_directory(dir)) {
    throw IngestionError("dataset directory not found: " + dir.string());
  }
  const auto files = list_images(dir);
  if (files.empty()) throw IngestionError("no images in " + dir.string());
  std::vector<torch::Tensor> faces;
  std::vector<std::string> names, failures;
  for (const auto& f : files) {
    try {
      faces.push_back(center_resize(read_face(f), resolution).chw().to(torch::kFloat32));
      names.push_back(f.filename().string());
    } catch (const InputError&) {
      failures.push_back(f.filename().string());
    }
  }
  if (!failures.empty()) {
    std::ostringstream msg;
    msg << "undecodable images in " << dir.string() << ":";
    for (const auto& f : failures) msg << ' ' << f;
    throw IngestionError(msg.str());
  }
  FaceDataset ds;
  ds.identity = dir.filename().empty() ? dir.parent_path().filename().string()
                                       : dir.filename().string();
  ds.faces = torch::stack(faces);
  ds.names = std::move(names);
  assign_default_split(ds);
  return ds;
}

void save_dataset(const FaceDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    write_face_png(dir / dataset.names[i], dataset.face(i));
  }
}

// --- procedural faces --------------------------------------------------------

namespace {

struct Rgb {
  double r, g, b;
};

struct IdentityTraits {
  Rgb skin, hair, background, iris, lips;
  double face_w, face_h;
  double hair_top, hair_width;
  double eye_dx, eye_y, eye_rx, eye_ry;
  double brow_y, brow_thickness;
  double nose_len;
  double mouth_w, mouth_y;
};

struct PoseJitter {
  double shift_x, shift_y, scale, roll;
  double brightness, light_x;
  double eye_open, mouth_open, gaze;
};

IdentityTraits sample_identity(Rng& rng) {
  IdentityTraits t;
  const double tone = rng.uniform(0.45, 0.95);
  t.skin = {tone, tone * rng.uniform(0.68, 0.84), tone * rng.uniform(0.52, 0.72)};
  const double hair_level = rng.uniform(0.05, 0.75);
  t.hair = {hair_level, hair_level * rng.uniform(0.6, 0.9), hair_level * rng.uniform(0.35, 0.7)};
  t.background = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
  t.iris = {rng.uniform(0.05, 0.45), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.6)};
  t.lips = {rng.uniform(0.55, 0.85), rng.uniform(0.2, 0.4), rng.uniform(0.25, 0.45)};
  t.face_w = rng.uniform(0.52, 0.68);
  t.face_h = rng.uniform(0.70, 0.86);
  t.hair_top = rng.uniform(0.20, 0.45);
  t.hair_width = rng.uniform(1.02, 1.18);
  t.eye_dx = rng.uniform(0.20, 0.30);
  t.eye_y = rng.uniform(-0.18, -0.06);
  t.eye_rx = rng.uniform(0.08, 0.12);
  t.eye_ry = rng.uniform(0.04, 0.065);
  t.brow_y = rng.uniform(0.08, 0.13);
  t.brow_thickness = rng.uniform(0.015, 0.035);
  t.nose_len = rng.uniform(0.15, 0.26);
  t.mouth_w = rng.uniform(0.16, 0.28);
  t.mouth_y = rng.uniform(0.33, 0.46);
  return t;
}

PoseJitter sample_pose(Rng& rng) {
  PoseJitter p;
  p.shift_x = rng.uniform(-0.06, 0.06);
  p.shift_y = rng.uniform(-0.05, 0.05);
  p.scale = rng.uniform(0.94, 1.06);
  p.roll = rng.uniform(-8.0, 8.0) * std::numbers::pi / 180.0;
  p.brightness = rng.uniform(0.85, 1.1);
  p.light_x = rng.uniform(-0.25, 0.25);
  p.eye_open = rng.uniform(0.45, 1.0);
  p.mouth_open = rng.uniform(0.0, 1.0);
  p.gaze = rng.uniform(-0.3, 0.3);
  return p;
}

// Soft coverage of an ellipse: ~1 inside, ~0 outside, `soft` wide transition.
double ellipse(double x, double y, double cx, double cy, double rx, double ry, double soft) {
  const double d = std::sqrt(((x - cx) * (x - cx)) / (rx * rx) + ((y - cy) * (y - cy)) / (ry * ry));
  const double dist = (d - 1.0) * std::min(rx, ry);
  return 1.0 / (1.0 + std::exp(dist / soft));
}

Rgb blend(Rgb base, Rgb top, double a) {
  return {base.r + (top.r - base.r) * a, base.g + (top.g - base.g) * a,
          base.b + (top.b - base.b) * a};
}

torch::Tensor render_face(const IdentityTraits& id, const PoseJitter& pose, int res, Rng& noise) {
  auto img = torch::empty({3, res, res}, torch::kFloat32);
  auto acc = img.accessor<float, 3>();
  const double soft = 0.8 / res;  // ~0.4 px transition
  const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);
  for (int py = 0; py < res; ++py) {
    for (int px = 0; px < res; ++px) {
      // pixel centre in [-1,1], then into the face frame
      const double u = (px + 0.5) / res * 2.0 - 1.0;
      const double v = (py + 0.5) / res * 2.0 - 1.0;
      const double ux = (u - pose.shift_x) / pose.scale, vy = (v - pose.shift_y) / pose.scale;
      const double x = cr * ux + sr * vy, y = -sr * ux + cr * vy;

      Rgb c = blend(id.background, {id.background.r * 0.7, id.background.g * 0.7, id.background.b * 0.7},
                    0.5 * (v + 1.0) / 2.0);
      // hair: a larger ellipse behind the head, visible above the face
      const double hair = ellipse(x, y, 0.0, -0.12, id.face_w * id.hair_width, id.face_h * 0.95, soft) *
                          (1.0 / (1.0 + std::exp((y + id.hair_top) / (4 * soft))));
      const double neck = ellipse(x, y, 0.0, 0.95, id.face_w * 0.55, 0.35, soft);
      c = blend(c, {id.skin.r * 0.85, id.skin.g * 0.85, id.skin.b * 0.85}, neck);
      c = blend(c, id.hair, std::max(hair, ellipse(x, y, 0.0, -0.2, id.face_w * id.hair_width,
                                                   id.face_h * 0.8, soft) *
                                               (y < -0.1 ? 1.0 : 0.0)));
      const double face = ellipse(x, y, 0.0, 0.0, id.face_w, id.face_h, soft);
      c = blend(c, id.skin, face);
      // fringe over the forehead
      const double fringe = face * (1.0 / (1.0 + std::exp((y + id.face_h * 0.62) / (2 * soft))));
      c = blend(c, id.hair, fringe);

      for (int side : {-1, 1}) {
        const double ex = side * id.eye_dx;
        const double ery = id.eye_ry * pose.eye_open;
        const double white = ellipse(x, y, ex, id.eye_y, id.eye_rx, ery, soft);
        c = blend(c, {0.93, 0.92, 0.9}, white);
        const double iris = ellipse(x, y, ex + pose.gaze * id.eye_rx * 0.5, id.eye_y,
                                    id.eye_ry * 0.95, id.eye_ry * 0.95, soft) * white;
        c = blend(c, id.iris, iris);
        const double pupil = ellipse(x, y, ex + pose.gaze * id.eye_rx * 0.5, id.eye_y,
                                     id.eye_ry * 0.4, id.eye_ry * 0.4, soft) * white;
        c = blend(c, {0.03, 0.03, 0.03}, pupil);
        const double brow = ellipse(x, y, ex, id.eye_y - id.brow_y, id.eye_rx * 1.15,
                                    id.brow_thickness, soft);
        c = blend(c, {id.hair.r * 0.8, id.hair.g * 0.8, id.hair.b * 0.8}, brow);
      }
      // nose: a shaded ridge and a darker tip
      const double nose = ellipse(x, y, 0.015, id.eye_y + id.nose_len * 0.6, 0.03, id.nose_len * 0.5, soft);
      c = blend(c, {id.skin.r * 0.8, id.skin.g * 0.78, id.skin.b * 0.76}, 0.6 * nose);
      const double tip = ellipse(x, y, 0.0, id.eye_y + id.nose_len + 0.02, 0.06, 0.03, soft);
      c = blend(c, {id.skin.r * 0.7, id.skin.g * 0.66, id.skin.b * 0.64}, 0.7 * tip);
      // mouth
      const double mouth_ry = 0.025 + 0.05 * pose.mouth_open;
      const double lips = ellipse(x, y, 0.0, id.mouth_y, id.mouth_w, mouth_ry + 0.015, soft);
      c = blend(c, id.lips, lips);
      const double inner = ellipse(x, y, 0.0, id.mouth_y, id.mouth_w * 0.8, mouth_ry * 0.6, soft);
      c = blend(c, {0.25, 0.05, 0.06}, inner * pose.mouth_open);

      // directional light
      const double light = pose.brightness * (1.0 + pose.light_x * x * face);
      const double grain = 0.008 * (noise.uniform(-1.0, 1.0));
      acc[0][py][px] = static_cast<float>(std::clamp(c.r * light + grain, 0.0, 1.0));
      acc[1][py][px] = static_cast<float>(std::clamp(c.g * light + grain, 0.0, 1.0));
      acc[2][py][px] = static_cast<float>(std::clamp(c.b * light + grain, 0.0, 1.0));
    }
  }
  return img;
}

}  // namespace

FaceDataset synth_faces(std::uint64_t identity_seed, int count, int resolution) {
  if (count < 2) throw ConfigError("synth_faces needs count >= 2");
  if (resolution < 8) throw ConfigError("synth_faces needs resolution >= 8");
  Rng id_rng(mix_seed(identity_seed, 0x1d3a7ULL));
  const auto traits = sample_identity(id_rng);
  FaceDataset ds;
  ds.identity = "synth_" + std::to_string(identity_seed);
  std::vector<torch::Tensor> faces;
  for (int i = 0; i < count; ++i) {
    Rng pose_rng(mix_seed(identity_seed, 1000 + static_cast<std::uint64_t>(i)));
    const auto pose = sample_pose(pose_rng);
    faces.push_back(render_face(traits, pose, resolution, pose_rng));
    char name[32];
    std::snprintf(name, sizeof(name), "face_%04d.png", i);
    ds.names.emplace_back(name);
  }
  // snap to 8-bit codes so synthetic faces behave like decoded PNGs
  ds.faces = torch::round(torch::stack(faces) * 255.0) / 255.0;
  assign_default_split(ds);
  return ds;
}

std::vector<std::int64_t> choose_protected_indices(std::int64_t n, double percentage, Rng& rng) {
  if (!(percentage >= 0.0 && percentage <= 100.0)) {
    throw ConfigError("adversarial percentage must lie in [0, 100]");
  }
  const auto k = static_cast<std::int64_t>(std::floor(percentage * n / 100.0 + 1e-9));
  std::vector<std::int64_t> idx(n);
  for (std::int64_t i = 0; i < n; ++i) idx[i] = i;
  // partial Fisher-Yates
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

FaceDataset mix_adversarial(const FaceDataset& real, const FaceDataset& protected_faces,
                            double percentage, Rng& rng) {
  if (real.size() != protected_faces.size() ||
      real.faces.sizes() != protected_faces.faces.sizes()) {
    throw ConfigError("mix_adversarial: real and protected datasets are not index-aligned");
  }
  FaceDataset out = real;
  out.faces = real.faces.clone();
  for (auto i : choose_protected_indices(real.size(), percentage, rng)) {
    out.faces[i].copy_(protected_faces.faces[i]);
  }
  return out;
}

}  // namespace advface
