#pragma once

#include <atomic>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include <torch/torch.h>

#include "advface/model.hpp"

namespace advface::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("advface_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline ModelConfig tiny_config(std::uint64_t seed = 0, int resolution = 32) {
  ModelConfig c;
  c.resolution = resolution;
  c.channel_scale = 0.125;
  c.seed = seed;
  return c;
}

/// Direct-summation DFT magnitude of a real r x c grid (row-major).
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x, int r, int c) {
  std::vector<double> out(static_cast<std::size_t>(r) * c);
  const double two_pi = 6.283185307179586476925286766559;
  for (int u = 0; u < r; ++u) {
    for (int v = 0; v < c; ++v) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < r; ++y) {
        for (int xx = 0; xx < c; ++xx) {
          const double phase = -two_pi * (static_cast<double>(u) * y / r + static_cast<double>(v) * xx / c);
          acc += x[static_cast<std::size_t>(y) * c + xx] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      }
      out[static_cast<std::size_t>(u) * c + v] = std::abs(acc);
    }
  }
  return out;
}

/// Luma in [0,255] computed per pixel from an H x W x 3 buffer.
inline std::vector<double> luma_255(const torch::Tensor& chw) {
  auto t = chw.to(torch::kFloat64).contiguous();
  const int h = static_cast<int>(t.size(1)), w = static_cast<int>(t.size(2));
  auto a = t.accessor<double, 3>();
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] =
          (299.0 * a[0][y][x] + 587.0 * a[1][y][x] + 114.0 * a[2][y][x]) / 1000.0 * 255.0;
    }
  }
  return out;
}

}  // namespace advface::testing
