#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "ctdb/bench.hpp"
#include "ctdb/degrade.hpp"
#include "ctdb/io.hpp"
#include "ctdb/iqa.hpp"
#include "ctdb/losses.hpp"
#include "ctdb/parallel.hpp"
#include "ctdb/phantom.hpp"
#include "ctdb/schema.hpp"
#include "ctdb/semantic.hpp"
#include "ctdb/spectral.hpp"
#include "ctdb/tomo.hpp"

namespace py = pybind11;
using namespace ctdb;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Array to_array(const Grid<double>& g) {
  Array out({g.rows(), g.cols()});
  std::memcpy(out.mutable_data(), g.data(), g.size() * sizeof(double));
  return out;
}

Grid<double> to_grid(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return {rows, cols, std::vector<double>(a.data(), a.data() + rows * cols)};
}

Mask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D mask");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return {rows, cols, std::vector<std::uint8_t>(a.data(), a.data() + rows * cols)};
}

Image to_image(const Array& a, double spacing) { return {to_grid(a), spacing}; }

Mask default_mask(const Array& a) {
  return reconstruction_mask(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
}

Mask mask_or_default(const Array& ref, const std::optional<MaskArray>& mask) {
  return mask ? to_mask(*mask) : default_mask(ref);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CT degradation benchmark core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::invalid_argument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("set_threads", &set_thread_count, py::arg("n"));

  // Images and tomography.
  m.def(
      "phantom",
      [](std::size_t size, std::uint64_t seed) {
        const auto img = make_phantom(size, seed);
        return py::make_tuple(to_array(img.hu), img.pixel_spacing_mm);
      },
      py::arg("size"), py::arg("seed"), "Procedural abdominal phantom in HU and its pixel spacing (mm).");
  m.def(
      "read_image",
      [](const std::filesystem::path& path) {
        const auto img = read_image(path);
        return py::make_tuple(to_array(img.hu), img.pixel_spacing_mm);
      },
      py::arg("path"));
  m.def(
      "write_image", [](const std::filesystem::path& path, const Array& hu, double spacing) {
        write_image(path, to_image(hu, spacing));
      },
      py::arg("path"), py::arg("hu"), py::arg("pixel_spacing_mm") = 1.0);
  m.def(
      "reconstruction_mask",
      [](std::size_t rows, std::size_t cols) {
        const auto mask = reconstruction_mask(rows, cols);
        py::array_t<std::uint8_t> out({rows, cols});
        std::memcpy(out.mutable_data(), mask.data(), mask.size());
        return out;
      },
      py::arg("rows"), py::arg("cols"));
  m.def(
      "reconstruct",
      [](const Array& hu, double spacing, std::size_t views) {
        const auto img = to_image(hu, spacing);
        const auto g = standard_geometry(img.height(), img.width(), spacing, views);
        return to_array(attenuation_to_hu(fbp(radon(hu_to_attenuation(img), g))).hu);
      },
      py::arg("hu"), py::arg("pixel_spacing_mm") = 1.0, py::arg("views") = kFullViewCount,
      "Forward project with the given number of views over [0, 180) and reconstruct with FBP.");

  // Metrics.
  m.def(
      "psnr",
      [](const Array& ref, const Array& deg, std::optional<MaskArray> mask, std::optional<double> data_range) {
        return psnr(to_image(ref, 1.0), to_image(deg, 1.0), mask_or_default(ref, mask), data_range);
      },
      py::arg("ref"), py::arg("deg"), py::arg("mask") = py::none(), py::arg("data_range") = py::none());
  m.def(
      "ssim",
      [](const Array& ref, const Array& deg, std::optional<MaskArray> mask,
         std::optional<std::pair<double, double>> window) {
        std::optional<IntensityWindow> w;
        if (window) w = IntensityWindow{window->first, window->second};
        return ssim(to_image(ref, 1.0), to_image(deg, 1.0), mask_or_default(ref, mask), w);
      },
      py::arg("ref"), py::arg("deg"), py::arg("mask") = py::none(), py::arg("window") = py::none());
  m.def(
      "vif",
      [](const Array& ref, const Array& deg, std::optional<MaskArray> mask,
         std::optional<std::pair<double, double>> window) {
        std::optional<IntensityWindow> w;
        if (window) w = IntensityWindow{window->first, window->second};
        return vif(to_image(ref, 1.0), to_image(deg, 1.0), mask_or_default(ref, mask), w);
      },
      py::arg("ref"), py::arg("deg"), py::arg("mask") = py::none(), py::arg("window") = py::none());

  // Statistics.
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) { return spearman(x, y); });
  m.def("pearson", [](std::vector<double> x, std::vector<double> y) { return pearson(x, y); });
  m.def(
      "qwk", [](std::vector<int> pred, std::vector<int> truth, int k) { return qwk(pred, truth, k); },
      py::arg("pred"), py::arg("truth"), py::arg("num_classes") = 4);
  m.def("macro_f1", [](std::vector<int> pred, std::vector<int> truth) { return accuracy_macro_f1(pred, truth).macro_f1; });

  // Spectral features.
  m.def("hf_ratio", [](const Array& hu) { return hf_energy_ratio(to_image(hu, 1.0)); });
  m.def("spectral_descriptor", [](const Array& hu) {
    const auto d = spectral_descriptor(to_image(hu, 1.0));
    py::dict out;
    out["radial"] = std::vector<double>(d.radial.begin(), d.radial.end());
    out["angular"] = std::vector<double>(d.angular.begin(), d.angular.end());
    out["hf_ratio"] = d.hf_ratio;
    out["hex"] = d.to_hex();
    return out;
  });

  // Semantic axis and CTDE files.
  m.attr("HIGH_QUALITY_PROMPTS") = std::vector<std::string>(kHighQualityPrompts.begin(), kHighQualityPrompts.end());
  m.attr("LOW_QUALITY_PROMPTS") = std::vector<std::string>(kLowQualityPrompts.begin(), kLowQualityPrompts.end());
  m.def("drift", [](std::vector<double> a, std::vector<double> b) { return embedding_drift(a, b); });
  m.def(
      "quality_axis",
      [](const std::vector<Vector>& high, const std::vector<Vector>& low) {
        const auto p = prototypes(high, low);
        return quality_axis(p.high, p.low).q;
      },
      py::arg("high"), py::arg("low"));
  m.def(
      "encode_ctde",
      [](const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
        EmbeddingSet set;
        for (const auto& [name, values] : entries) set.add({name, values});
        const auto bytes = encode_embeddings(set);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("entries"), "Serialize (name, float32 values) pairs.");
  m.def(
      "decode_ctde",
      [](const py::bytes& data) {
        const std::string_view view = data;
        const auto set = decode_embeddings(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
        std::vector<std::pair<std::string, std::vector<float>>> out;
        for (const auto& e : set.entries()) out.emplace_back(e.name, e.values);
        return out;
      },
      py::arg("data"));

  // Losses.
  m.def(
      "total_loss",
      [](double cls, double reg, double rank, double con) { return total_loss({cls, reg, rank, con}); },
      py::arg("cls"), py::arg("reg"), py::arg("rank"), py::arg("con"));
  m.def(
      "supcon_loss",
      [](const std::vector<Vector>& z, const std::vector<int>& labels, double tau) {
        return supcon_loss(z, labels, tau).value;
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("temperature") = 0.07);

  // Dataset.
  m.def(
      "generate",
      [](const std::string& config_json, const std::filesystem::path& out) {
        auto cfg = GenerationConfig::from_json(nlohmann::json::parse(config_json));
        cfg.output_dir = out;
        py::gil_scoped_release release;
        return generate(cfg).samples.size();
      },
      py::arg("config_json"), py::arg("out"), "Generate a dataset; returns the number of samples.");
  m.def(
      "validate_metadata",
      [](const std::string& text) { return validate_metadata(nlohmann::json::parse(text)); },
      py::arg("metadata_json"), "Schema and semantic errors for one metadata document (empty when valid).");
  m.def("metadata_schema", [] { return metadata_schema().dump(); });
}
