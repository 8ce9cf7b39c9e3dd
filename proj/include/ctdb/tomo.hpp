#pragma once

// Parallel-beam forward model, filtered backprojection and HU conversion.

#include <cstddef>
#include <vector>

#include "ctdb/grid.hpp"

namespace ctdb {

struct PhysicsConstants {
  double mu_water = 0.0206;  // mm^-1, ~70 keV effective energy
};

/// A CT slice in Hounsfield units.
struct Image {
  Grid<double> hu;
  double pixel_spacing_mm = 1.0;

  [[nodiscard]] std::size_t height() const noexcept { return hu.rows(); }
  [[nodiscard]] std::size_t width() const noexcept { return hu.cols(); }
  void validate() const;
};

/// Linear attenuation coefficients in mm^-1 on the same grid as an Image.
struct AttenuationMap {
  Grid<double> mu;
  double pixel_spacing_mm = 1.0;

  [[nodiscard]] std::size_t height() const noexcept { return mu.rows(); }
  [[nodiscard]] std::size_t width() const noexcept { return mu.cols(); }
  void validate() const;
};

/// Parallel-beam acquisition geometry together with the image grid it covers.
///
/// Angles are in degrees, strictly increasing, in [0, 180). Detector bin k sits
/// at offset (k - (num_detectors - 1) / 2) * detector_spacing_mm from the
/// rotation center. The rotation center is given in pixel coordinates
/// (row, col) of the image grid.
struct Geometry {
  std::vector<double> angles_deg;
  std::size_t num_detectors = 0;
  double detector_spacing_mm = 1.0;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  double pixel_spacing_mm = 1.0;
  double center_row = 0.0;
  double center_col = 0.0;

  [[nodiscard]] std::size_t num_views() const noexcept { return angles_deg.size(); }

  /// Throws std::invalid_argument on malformed angles, an empty grid, or a
  /// detector array that does not cover the image diagonal.
  void validate() const;

  /// Every (num_views / n_views)-th view, starting with the first.
  [[nodiscard]] Geometry subset(std::size_t n_views) const;

  bool operator==(const Geometry&) const = default;
};

inline constexpr std::size_t kFullViewCount = 360;

/// ceil(sqrt(2) * max(rows, cols)) rounded up to even.
std::size_t default_detector_count(std::size_t rows, std::size_t cols);

/// Uniform views over [0, 180), detectors covering the diagonal at unit
/// magnification, rotation center at the grid center.
Geometry standard_geometry(std::size_t rows, std::size_t cols, double pixel_spacing_mm,
                           std::size_t num_views = kFullViewCount);

struct Sinogram {
  Geometry geometry;
  Grid<double> values;  // num_views x num_detectors line integrals (mu * mm)

  void validate() const;
};

AttenuationMap hu_to_attenuation(const Image& img, const PhysicsConstants& c = {});
Image attenuation_to_hu(const AttenuationMap& m, const PhysicsConstants& c = {});

/// Discretized line integrals with bilinear sampling at pixel-spacing steps.
Sinogram radon(const AttenuationMap& m, const Geometry& g);

/// Ram-Lak filtered backprojection onto the geometry's image grid. Pixels
/// outside the inscribed reconstruction circle are set to zero attenuation
/// (-1000 HU).
AttenuationMap fbp(const Sinogram& s);

/// Pixels within the inscribed circle of a rows x cols grid.
Mask reconstruction_mask(std::size_t rows, std::size_t cols);

}  // namespace ctdb
