#include "advface/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "advface/errors.hpp"
#include "advface/image_io.hpp"

namespace advface {

namespace {

// min + mean(x - min): exact for constant inputs, otherwise an ordinary mean.
double stable_mean(const torch::Tensor& values) {
  if (values.numel() == 0) return 0.0;
  const double lo = values.min().item<double>();
  return lo + (values - lo).sum().item<double>() / static_cast<double>(values.numel());
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Spectrum fft_magnitude(const FaceTensor& face, SpectrumMode mode) {
  auto rgb = face.chw().to(torch::kFloat64);
  if (mode == SpectrumMode::luma) {
    // integer weights keep grey = v exactly for r = g = b = v
    auto grey = (299.0 * rgb[0] + 587.0 * rgb[1] + 114.0 * rgb[2]) / 1000.0 * 255.0;
    return Spectrum{torch::fft::fft2(grey).abs().contiguous()};
  }
  auto mags = torch::fft::fft2(rgb * 255.0).abs();
  return Spectrum{mags.mean(0).contiguous()};
}

double aih(const Spectrum& spectrum, int margin) {
  const auto r = spectrum.rows(), c = spectrum.cols();
  if (margin < 0 || r <= 2 * margin || c <= 2 * margin) {
    throw ConfigError("spectrum " + std::to_string(r) + "x" + std::to_string(c) +
                      " is too small for an AIH margin of " + std::to_string(margin));
  }
  using torch::indexing::Slice;
  auto centre = spectrum.magnitudes.index({Slice(margin, r - margin), Slice(margin, c - margin)});
  return stable_mean(centre);
}

double ati(const DetectionMask& mask, double top_fraction, AtiDenominator denominator) {
  if (!mask.values.defined() || mask.values.numel() == 0) {
    throw InputError("ati: empty mask");
  }
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw ConfigError("ati: top_fraction must lie in (0, 1]");
  }
  const auto n = mask.values.numel();
  auto k = static_cast<int64_t>(std::ceil(top_fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<int64_t>(k, 1, n);
  auto flat = mask.values.to(torch::kFloat64).reshape({-1});
  auto top = std::get<0>(torch::topk(flat, k, 0, /*largest=*/true, /*sorted=*/true));
  const double mean_top = stable_mean(top);
  if (denominator == AtiDenominator::top_count) return mean_top;
  return mean_top * static_cast<double>(k) / static_cast<double>(n);
}

torch::Tensor spectrum_display(const Spectrum& spectrum) {
  auto shifted = torch::fft::fftshift(spectrum.magnitudes);
  auto logged = torch::log1p(shifted);
  const double peak = logged.max().item<double>();
  if (peak <= 0.0) return torch::zeros_like(logged);
  return logged / peak * 255.0;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(sq / static_cast<double>(values.size()));
  return a;
}

void MetricReport::finalize() {
  std::vector<double> aihs, atis;
  for (const auto& e : per_image) {
    aihs.push_back(e.aih);
    if (e.ati) atis.push_back(*e.ati);
  }
  aih = aggregate(aihs);
  if (atis.empty()) {
    ati.reset();
  } else {
    ati = aggregate(atis);
  }
}

namespace {

std::optional<std::filesystem::path> find_mask(const std::filesystem::path& dir,
                                               const std::filesystem::path& image) {
  for (const auto& candidate : list_images(dir)) {
    if (candidate.stem() == image.stem()) return candidate;
  }
  return std::nullopt;
}

}  // namespace

MetricReport evaluate_set(const std::filesystem::path& images,
                          const std::optional<std::filesystem::path>& masks,
                          const EvaluationOptions& options) {
  if (!std::filesystem::is_directory(images)) {
    throw InputError("image directory not found: " + images.string());
  }
  MetricReport report;
  for (const auto& path : list_images(images)) {
    MetricEntry entry;
    entry.image_id = path.filename().string();
    try {
      entry.aih = aih(fft_magnitude(read_face(path), options.spectrum_mode), options.margin);
    } catch (const InputError& e) {
      report.warnings.push_back("skipped " + entry.image_id + ": " + e.what());
      continue;
    }
    if (masks) {
      if (auto mask_path = find_mask(*masks, path)) {
        try {
          entry.ati = ati(read_mask(*mask_path), options.top_fraction, options.ati_denominator);
        } catch (const InputError& e) {
          report.warnings.push_back("mask for " + entry.image_id + " unreadable: " + e.what());
        }
      }
    }
    report.per_image.push_back(std::move(entry));
  }
  report.finalize();
  return report;
}

MetricReport evaluate_faces(const std::vector<std::pair<std::string, FaceTensor>>& faces,
                            const std::vector<std::optional<DetectionMask>>& masks,
                            const EvaluationOptions& options) {
  if (!masks.empty() && masks.size() != faces.size()) {
    throw InputError("evaluate_faces: masks must be index-aligned with faces");
  }
  MetricReport report;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    MetricEntry entry;
    entry.image_id = faces[i].first;
    entry.aih = aih(fft_magnitude(faces[i].second, options.spectrum_mode), options.margin);
    if (!masks.empty() && masks[i]) {
      entry.ati = ati(*masks[i], options.top_fraction, options.ati_denominator);
    }
    report.per_image.push_back(std::move(entry));
  }
  report.finalize();
  return report;
}

namespace {

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
}

Aggregate aggregate_from(const nlohmann::json& j) {
  Aggregate a;
  j.at("mean").get_to(a.mean);
  j.at("std").get_to(a.std);
  j.at("count").get_to(a.count);
  return a;
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.per_image) {
    nlohmann::json row{{"image_id", e.image_id}, {"aih", e.aih}};
    row["ati"] = e.ati ? nlohmann::json(*e.ati) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  nlohmann::json aggregates{{"aih", aggregate_json(report.aih)}};
  aggregates["ati"] = report.ati ? aggregate_json(*report.ati) : nlohmann::json(nullptr);
  return nlohmann::json{{"variant", report.variant},
                        {"per_image", rows},
                        {"aggregates", aggregates},
                        {"warnings", report.warnings}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  try {
    j.at("variant").get_to(r.variant);
    for (const auto& row : j.at("per_image")) {
      MetricEntry e;
      row.at("image_id").get_to(e.image_id);
      row.at("aih").get_to(e.aih);
      if (row.contains("ati") && !row.at("ati").is_null()) e.ati = row.at("ati").get<double>();
      r.per_image.push_back(std::move(e));
    }
    const auto& agg = j.at("aggregates");
    r.aih = aggregate_from(agg.at("aih"));
    if (agg.contains("ati") && !agg.at("ati").is_null()) r.ati = aggregate_from(agg.at("ati"));
    if (j.contains("warnings")) j.at("warnings").get_to(r.warnings);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed metric report: ") + e.what());
  }
  return r;
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "image_id,aih,ati\n";
  for (const auto& e : report.per_image) {
    out << e.image_id << ',' << format_number(e.aih) << ',';
    if (e.ati) out << format_number(*e.ati);
    out << '\n';
  }
  return out.str();
}

}  // namespace advface
