#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include <torch/torch.h>

#include "advface/face_tensor.hpp"

namespace advface {

/// Unshifted 2-D DFT magnitude (r x c, float64, non-negative) of a face on the
/// [0,255] grey scale.
struct Spectrum {
  torch::Tensor magnitudes;

  int64_t rows() const { return magnitudes.size(0); }
  int64_t cols() const { return magnitudes.size(1); }
};

enum class SpectrumMode {
  luma,            // ITU-R 601 grey conversion before the DFT
  channel_average  // mean of the three per-channel magnitude spectra
};

Spectrum fft_magnitude(const FaceTensor& face, SpectrumMode mode = SpectrumMode::luma);

/// Mean of the centre (r-2m) x (c-2m) block of an unshifted spectrum, i.e. the
/// high-frequency region. Throws ConfigError when r or c <= 2m.
double aih(const Spectrum& spectrum, int margin = 20);

/// Per-pixel manipulation probabilities in [0,1].
struct DetectionMask {
  torch::Tensor values;  // r x c, float64
  std::string source;
};

enum class AtiDenominator {
  top_count,  // divide by the number of averaged values
  full_mask   // divide the top sum by r*c
};

/// Mean of the top ceil(top_fraction * r * c) mask values.
double ati(const DetectionMask& mask, double top_fraction = 0.02,
           AtiDenominator denominator = AtiDenominator::top_count);

/// Log-magnitude spectrum with the zero frequency moved to the centre, scaled to 0..255
/// (display only).
torch::Tensor spectrum_display(const Spectrum& spectrum);

struct MetricEntry {
  std::string image_id;
  double aih = 0.0;
  std::optional<double> ati;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MetricReport {
  std::string variant;
  std::vector<MetricEntry> per_image;
  Aggregate aih;
  std::optional<Aggregate> ati;
  /// Files skipped during evaluation, with reasons.
  std::vector<std::string> warnings;

  /// Recomputes aih / ati from per_image.
  void finalize();
};

struct EvaluationOptions {
  int margin = 20;
  double top_fraction = 0.02;
  SpectrumMode spectrum_mode = SpectrumMode::luma;
  AtiDenominator ati_denominator = AtiDenominator::top_count;
};

/// Scores every image in `images` (sorted by filename). Masks pair by file stem.
/// Unreadable images are skipped and listed in the report's warnings.
MetricReport evaluate_set(const std::filesystem::path& images,
                          const std::optional<std::filesystem::path>& masks,
                          const EvaluationOptions& options = {});

/// Scores in-memory faces; masks (if given) are index-aligned.
MetricReport evaluate_faces(const std::vector<std::pair<std::string, FaceTensor>>& faces,
                            const std::vector<std::optional<DetectionMask>>& masks,
                            const EvaluationOptions& options = {});

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const MetricReport& report);

}  // namespace advface
