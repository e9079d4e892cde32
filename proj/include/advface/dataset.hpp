#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "advface/face_tensor.hpp"
#include "advface/rng.hpp"

namespace advface {

/// Faces of one identity, all at one resolution, with a disjoint train/holdout split.
struct FaceDataset {
  std::string identity;
  /// N x 3 x R x R, float32, values in [0,1].
  torch::Tensor faces;
  /// Source filename (or generated name) per face.
  std::vector<std::string> names;
  std::vector<std::int64_t> train_indices;
  std::vector<std::int64_t> holdout_indices;

  std::int64_t size() const { return faces.defined() ? faces.size(0) : 0; }
  int resolution() const { return static_cast<int>(faces.size(2)); }
  FaceTensor face(std::int64_t i) const { return FaceTensor(faces[i]); }
  torch::Tensor train_faces() const;
  torch::Tensor holdout_faces() const;

  /// Checks N >= 2, a shared resolution, and that the split is disjoint and exhaustive.
  void validate() const;
};

/// Index-based 90/10 split: the last max(1, N/10) faces are held out.
void assign_default_split(FaceDataset& dataset);
/// The last floor(fraction * N) faces (at least one when fraction > 0) are held out.
/// fraction = 0 leaves the holdout empty.
void assign_split(FaceDataset& dataset, double holdout_fraction);

/// Decodes every image in `dir` (sorted by filename), centre-resizes to `resolution`.
/// Throws IngestionError listing undecodable files, or if the directory is empty.
FaceDataset load_dataset(const std::filesystem::path& dir, int resolution);

/// Writes faces as 8-bit PNGs named after `names` into `dir`.
void save_dataset(const FaceDataset& dataset, const std::filesystem::path& dir);

/// Procedural face-like images: elliptical head, hair, eyes, brows, nose and mouth.
/// Identity traits come from identity_seed; pose, expression and lighting jitter per image.
/// Values sit on 8-bit codes (multiples of 1/255).
FaceDataset synth_faces(std::uint64_t identity_seed, int count, int resolution);

/// ⌊percentage·N/100⌋ uniformly chosen indices take the protected face, the rest the
/// real one. `real` and `protected_faces` must be index-aligned.
FaceDataset mix_adversarial(const FaceDataset& real, const FaceDataset& protected_faces,
                            double percentage, Rng& rng);

/// Indices of `mix_adversarial`'s selection (sorted), for provenance and tests.
std::vector<std::int64_t> choose_protected_indices(std::int64_t n, double percentage, Rng& rng);

}  // namespace advface
