#include <algorithm>
#include <fstream>

#include "doctest.h"

#include "advface/errors.hpp"
#include "advface/image_io.hpp"
#include "advface/metrics.hpp"
#include "advface/rng.hpp"
#include "../support.hpp"

using namespace advface;
using advface::testing::TempDir;

namespace {

FaceTensor random_face(std::uint64_t seed, int size) {
  Rng rng(seed);
  auto gen = rng.torch_generator();
  return FaceTensor(torch::rand({3, size, size}, gen, torch::kFloat64));
}

DetectionMask mask_of(torch::Tensor v) { return DetectionMask{v.to(torch::kFloat64), "test"}; }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("aih of a constant image is exactly zero") {
    for (double v : {0.0, 0.25, 0.5, 1.0}) {
      CHECK(aih(fft_magnitude(FaceTensor::constant(32, 32, v, torch::kFloat64)), 10) == 0.0);
      CHECK(aih(fft_magnitude(FaceTensor::constant(64, 64, v)), 20) == 0.0);
    }
  }

  TEST_CASE("aih of a unit impulse is exactly 255") {
    for (int size : {32, 64}) {
      auto t = torch::zeros({3, size, size}, torch::kFloat64);
      t.index_put_({torch::indexing::Slice(), 0, 0}, 1.0);
      CHECK(aih(fft_magnitude(FaceTensor(t)), size / 4) == 255.0);
    }
  }

  TEST_CASE("aih matches direct summation on small inputs") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto face = random_face(seed, 12);
      const auto mags = advface::testing::naive_dft_magnitude(advface::testing::luma_255(face.chw()), 12, 12);
      double sum = 0.0;
      int n = 0;
      for (int u = 3; u < 9; ++u) {
        for (int v = 3; v < 9; ++v) {
          sum += mags[u * 12 + v];
          ++n;
        }
      }
      CHECK(aih(fft_magnitude(face), 3) == doctest::Approx(sum / n).epsilon(1e-10));
    }
  }

  TEST_CASE("centre block is the half-open range [m, r-m)") {
    auto mags = torch::zeros({8, 8}, torch::kFloat64);
    mags.index_put_({torch::indexing::Slice(2, 6), torch::indexing::Slice(2, 6)}, 7.0);
    CHECK(aih(Spectrum{mags}, 2) == 7.0);
    CHECK(aih(Spectrum{mags}, 1) == doctest::Approx(7.0 * 16 / 36));
  }

  TEST_CASE("aih rejects margins that leave no centre") {
    auto s = fft_magnitude(FaceTensor::constant(32, 32, 0.5));
    CHECK_THROWS_AS(aih(s, 16), ConfigError);
    CHECK_THROWS_AS(aih(s, -1), ConfigError);
    CHECK_NOTHROW(aih(s, 15));
  }

  TEST_CASE("channel-average mode equals luma for grey images") {
    auto grey = torch::rand({1, 16, 16}, torch::kFloat64).expand({3, 16, 16}).contiguous();
    FaceTensor f(grey);
    CHECK(aih(fft_magnitude(f, SpectrumMode::channel_average), 4) ==
          doctest::Approx(aih(fft_magnitude(f, SpectrumMode::luma), 4)).epsilon(1e-12));
  }

  TEST_CASE("ati fixed points") {
    for (double v : {0.0, 0.3, 1.0}) {
      CHECK(ati(mask_of(torch::full({32, 32}, v, torch::kFloat64))) == v);
    }
    // 2% of 50 x 50 = 50 pixels of ones
    auto m = torch::zeros({50, 50}, torch::kFloat64);
    m.view({-1}).index_put_({torch::indexing::Slice(0, 50)}, 1.0);
    CHECK(ati(mask_of(m)) == 1.0);
  }

  TEST_CASE("ati matches a full sort") {
    Rng rng(3);
    auto gen = rng.torch_generator();
    for (int trial = 0; trial < 10; ++trial) {
      auto v = torch::rand({17, 23}, gen, torch::kFloat64);
      std::vector<double> flat(v.data_ptr<double>(), v.data_ptr<double>() + v.numel());
      std::sort(flat.begin(), flat.end(), std::greater<>());
      const std::size_t k = 8;  // ceil(0.02 * 391) = ceil(7.82)
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) sum += flat[i];
      CHECK(ati(mask_of(v)) == doctest::Approx(sum / k).epsilon(1e-12));
      CHECK(ati(mask_of(v), 0.02, AtiDenominator::full_mask) ==
            doctest::Approx(sum / 391.0).epsilon(1e-12));
    }
  }

  TEST_CASE("ati top count rounds up but not on exact products") {
    // 0.02 * 100 = 2.0000000000000004 in floating point; must average exactly 2 values
    auto m = torch::zeros({10, 10}, torch::kFloat64);
    m.view({-1})[0] = 1.0;
    m.view({-1})[1] = 1.0;
    m.view({-1})[2] = 0.5;
    CHECK(ati(mask_of(m)) == 1.0);
    CHECK(ati(mask_of(torch::ones({3, 3}, torch::kFloat64)), 0.02) == 1.0);
  }

  TEST_CASE("ati input validation") {
    CHECK_THROWS_AS(ati(DetectionMask{}), InputError);
    CHECK_THROWS_AS(ati(mask_of(torch::ones({4, 4})), 0.0), ConfigError);
    CHECK_THROWS_AS(ati(mask_of(torch::ones({4, 4})), 1.5), ConfigError);
  }

  TEST_CASE("aggregate uses the population standard deviation") {
    auto a = aggregate({1.0, 2.0, 3.0, 4.0});
    CHECK(a.mean == 2.5);
    CHECK(a.std == doctest::Approx(std::sqrt(1.25)));
    CHECK(a.count == 4);
    CHECK(aggregate({}).count == 0);
  }

  TEST_CASE("report mean equals the per-image mean and survives JSON") {
    std::vector<std::pair<std::string, FaceTensor>> faces;
    for (int i = 0; i < 4; ++i) faces.emplace_back("f" + std::to_string(i), random_face(i, 32));
    std::vector<std::optional<DetectionMask>> masks(4);
    masks[1] = mask_of(torch::full({32, 32}, 0.25));
    auto report = evaluate_faces(faces, masks, EvaluationOptions{10});
    double sum = 0.0;
    for (const auto& e : report.per_image) sum += e.aih;
    CHECK(report.aih.mean == doctest::Approx(sum / 4).epsilon(1e-14));
    REQUIRE(report.ati);
    CHECK(report.ati->count == 1);
    CHECK(report.ati->mean == 0.25);

    auto back = report_from_json(report_to_json(report));
    CHECK(back.per_image.size() == 4);
    CHECK(back.aih.mean == report.aih.mean);
    CHECK_FALSE(back.per_image[0].ati);
    CHECK(*back.per_image[1].ati == 0.25);
    CHECK(report_to_csv(back) == report_to_csv(report));
    CHECK(report_to_csv(report).rfind("image_id,aih,ati\n", 0) == 0);
  }

  TEST_CASE("evaluate_set skips undecodable files and pairs masks by stem") {
    TempDir dir("metrics");
    std::filesystem::create_directories(dir / "img");
    std::filesystem::create_directories(dir / "mask");
    write_face_png(dir / "img/a.png", random_face(1, 32));
    write_face_png(dir / "img/b.png", random_face(2, 32));
    std::ofstream(dir / "img/c.png") << "not an image";
    write_mask_png(dir / "mask/b.png", mask_of(torch::full({32, 32}, 1.0)));
    auto report = evaluate_set(dir / "img", dir / "mask", EvaluationOptions{10});
    REQUIRE(report.per_image.size() == 2);
    CHECK(report.warnings.size() == 1);
    CHECK_FALSE(report.per_image[0].ati);
    REQUIRE(report.per_image[1].ati);
    CHECK(*report.per_image[1].ati == 1.0);
    CHECK_THROWS_AS(evaluate_set(dir / "missing", std::nullopt, {}), InputError);
  }

  TEST_CASE("spectrum display is centred and scaled to 0..255") {
    auto d = spectrum_display(fft_magnitude(random_face(4, 16)));
    CHECK(d.max().item<double>() == doctest::Approx(255.0));
    CHECK(d.min().item<double>() >= 0.0);
    // the DC term is the largest magnitude and lands at the centre
    CHECK(d[8][8].item<double>() == doctest::Approx(255.0));
  }
}
