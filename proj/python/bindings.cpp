#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "advface/checkpoint.hpp"
#include "advface/cli.hpp"
#include "advface/config.hpp"
#include "advface/dataset.hpp"
#include "advface/errors.hpp"
#include "advface/image_io.hpp"
#include "advface/metrics.hpp"
#include "advface/protection.hpp"
#include "advface/transforms.hpp"

namespace py = pybind11;
using namespace advface;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// H x W x 3 (numpy layout) -> 3 x H x W float64 face
FaceTensor face_from_array(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InputError("expected an H x W x 3 array");
  auto t = torch::from_blob(const_cast<double*>(a.data()), {a.shape(0), a.shape(1), 3}, torch::kFloat64);
  return FaceTensor(t.permute({2, 0, 1}).contiguous().clone());
}

Array array_from_tensor(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
  Array out(shape);
  std::memcpy(out.mutable_data(), c.data_ptr<double>(), sizeof(double) * static_cast<std::size_t>(c.numel()));
  return out;
}

Array array_from_face(const FaceTensor& f) { return array_from_tensor(f.chw().permute({1, 2, 0})); }

SpectrumMode parse_mode(const std::string& s) {
  if (s == "luma") return SpectrumMode::luma;
  if (s == "channel_average") return SpectrumMode::channel_average;
  throw ConfigError("unknown spectrum mode '" + s + "'");
}

TransformParams params_from_dict(const py::dict& d) {
  auto p = TransformParams::identity();
  for (auto item : d) {
    const auto key = py::cast<std::string>(item.first);
    if (key == "scale") p.scale = py::cast<double>(item.second);
    else if (key == "rotation_deg") p.rotation_deg = py::cast<double>(item.second);
    else if (key == "translate_x") p.translate_x = py::cast<double>(item.second);
    else if (key == "translate_y") p.translate_y = py::cast<double>(item.second);
    else if (key == "warp_grid") p.warp_grid = py::cast<int>(item.second);
    else if (key == "warp_offsets") p.warp_offsets = py::cast<std::vector<double>>(item.second);
    else throw ConfigError("unknown transform parameter '" + key + "'");
  }
  if (p.warp_offsets.empty()) p.warp_offsets.assign(static_cast<std::size_t>(p.warp_grid * p.warp_grid * 2), 0.0);
  return p;
}

py::dict protect_face(const Array& image, const std::string& method, double epsilon,
                      const std::optional<std::string>& checkpoint, std::optional<int> iterations,
                      std::optional<double> alpha, std::uint64_t seed) {
  const auto face = face_from_array(image);
  auto cfg = AttackConfig::defaults(parse_attack_method(method), epsilon, face.height());
  if (iterations) cfg.iterations = *iterations;
  if (alpha) cfg.alpha = *alpha;
  cfg.seed = seed;
  cfg.validate();
  DiscriminatorLoss loss;
  if (cfg.method != AttackMethod::random) {
    if (!checkpoint) throw ConfigError(method + " needs a checkpoint");
    auto model = load_checkpoint(*checkpoint);
    model->eval();
    loss = real_label_objective(model, Domain::A);
  }
  Rng rng(seed);
  ProtectionResult r;
  {
    py::gil_scoped_release release;
    r = protect(loss, face, cfg, rng);
  }
  py::dict out;
  out["image"] = array_from_face(r.face);
  out["loss_trace"] = r.loss_trace;
  return out;
}

Array swap_faces(const std::string& checkpoint, const Array& images, const std::string& to) {
  if (images.ndim() != 4 || images.shape(3) != 3) throw InputError("expected an N x H x W x 3 array");
  auto model = load_checkpoint(checkpoint);
  model->eval();
  const Domain domain = parse_domain(to);
  auto batch = torch::from_blob(const_cast<double*>(images.data()),
                                {images.shape(0), images.shape(1), images.shape(2), 3}, torch::kFloat64)
                   .permute({0, 3, 1, 2})
                   .to(torch::kFloat32)
                   .contiguous();
  torch::NoGradGuard no_grad;
  return array_from_tensor(model->generate(batch, domain).permute({0, 2, 3, 1}));
}

}  // namespace

PYBIND11_MODULE(_advface, m) {
  m.doc() = "Face protection against face-swap training: metrics, transforms, protection and the CLI.";
  torch::set_num_threads(1);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateTransformError>(m, "DegenerateTransformError", PyExc_ValueError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_OSError);

  m.def(
      "aih",
      [](const Array& image, int margin, const std::string& mode) {
        return aih(fft_magnitude(face_from_array(image), parse_mode(mode)), margin);
      },
      py::arg("image"), py::arg("margin") = 20, py::arg("mode") = "luma",
      "Mean unshifted DFT magnitude over the central block, image in [0,1] (H x W x 3).");
  m.def(
      "spectrum",
      [](const Array& image, const std::string& mode) {
        return array_from_tensor(fft_magnitude(face_from_array(image), parse_mode(mode)).magnitudes);
      },
      py::arg("image"), py::arg("mode") = "luma");
  m.def(
      "ati",
      [](const Array& mask, double top_fraction, const std::string& denominator) {
        if (mask.ndim() != 2) throw InputError("mask must be 2-D");
        auto t = torch::from_blob(const_cast<double*>(mask.data()), {mask.shape(0), mask.shape(1)}, torch::kFloat64)
                     .clone();
        AtiDenominator d;
        if (denominator == "top_count") d = AtiDenominator::top_count;
        else if (denominator == "full_mask") d = AtiDenominator::full_mask;
        else throw ConfigError("unknown ATI denominator '" + denominator + "'");
        return ati(DetectionMask{t, "array"}, top_fraction, d);
      },
      py::arg("mask"), py::arg("top_fraction") = 0.02, py::arg("denominator") = "top_count");
  m.def(
      "apply_transform",
      [](const Array& image, const py::dict& params) {
        return array_from_face(apply_transform(face_from_array(image), params_from_dict(params)));
      },
      py::arg("image"), py::arg("params"));
  m.def(
      "project_linf",
      [](const Array& candidate, const Array& origin, double epsilon) {
        return array_from_face(project_linf(face_from_array(candidate), face_from_array(origin), epsilon));
      },
      py::arg("candidate"), py::arg("origin"), py::arg("epsilon"));
  m.def("protect", &protect_face, py::arg("image"), py::arg("method") = "pgd", py::arg("epsilon") = 0.1,
        py::arg("checkpoint") = std::nullopt, py::arg("iterations") = std::nullopt,
        py::arg("alpha") = std::nullopt, py::arg("seed") = 0,
        "Protect one face. Gradient methods need a checkpoint path. Returns {image, loss_trace}.");
  m.def("swap", &swap_faces, py::arg("checkpoint"), py::arg("images"), py::arg("to") = "A",
        "Run a trained model's encoder and the chosen decoder on N x H x W x 3 faces.");
  m.def(
      "synth_faces",
      [](std::uint64_t seed, int count, int resolution) {
        return array_from_tensor(synth_faces(seed, count, resolution).faces.permute({0, 2, 3, 1}));
      },
      py::arg("seed"), py::arg("count"), py::arg("resolution") = 32);
  m.def(
      "read_face", [](const std::filesystem::path& p) { return array_from_face(read_face(p)); }, py::arg("path"));
  m.def(
      "write_face_png",
      [](const std::filesystem::path& p, const Array& image, int bit_depth) {
        write_face_png(p, face_from_array(image), bit_depth);
      },
      py::arg("path"), py::arg("image"), py::arg("bit_depth") = 8);
  m.def("default_config_json", [] { return dump_json(default_experiment_config()); });
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run `advface <args>` in-process. Returns (exit_code, stdout, stderr).");
}
