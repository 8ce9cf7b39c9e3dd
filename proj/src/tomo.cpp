#include "ctdb/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ctdb/parallel.hpp"
#include "fft.hpp"

namespace ctdb {

namespace {

constexpr double kHuFloor = -1000.0;

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " contains non-finite values");
  }
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void Image::validate() const {
  if (hu.rows() == 0 || hu.cols() == 0) throw std::invalid_argument("image has an empty grid");
  if (!(pixel_spacing_mm > 0.0)) throw std::invalid_argument("pixel spacing must be positive");
  require_finite(hu.values(), "image");
}

void AttenuationMap::validate() const {
  if (mu.rows() == 0 || mu.cols() == 0) {
    throw std::invalid_argument("attenuation map has an empty grid");
  }
  if (!(pixel_spacing_mm > 0.0)) throw std::invalid_argument("pixel spacing must be positive");
  require_finite(mu.values(), "attenuation map");
}

void Geometry::validate() const {
  if (image_rows == 0 || image_cols == 0) throw std::invalid_argument("geometry has an empty image grid");
  if (!(pixel_spacing_mm > 0.0) || !(detector_spacing_mm > 0.0)) {
    throw std::invalid_argument("geometry spacings must be positive");
  }
  if (angles_deg.empty()) throw std::invalid_argument("geometry has no views");
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double a = angles_deg[i];
    if (!std::isfinite(a) || a < 0.0 || a >= 180.0) {
      throw std::invalid_argument("view angles must lie in [0, 180)");
    }
    if (i > 0 && !(a > angles_deg[i - 1])) {
      throw std::invalid_argument("view angles must be strictly increasing");
    }
  }
  const double diagonal =
      std::hypot(static_cast<double>(image_rows), static_cast<double>(image_cols)) *
      pixel_spacing_mm;
  if (static_cast<double>(num_detectors) * detector_spacing_mm + 1e-9 < diagonal) {
    throw std::invalid_argument("detector array does not cover the image diagonal");
  }
}

Geometry Geometry::subset(std::size_t n_views) const {
  if (n_views == 0 || num_views() % n_views != 0) {
    throw std::invalid_argument("view count " + std::to_string(n_views) +
                                " does not divide " + std::to_string(num_views()));
  }
  const std::size_t stride = num_views() / n_views;
  Geometry out = *this;
  out.angles_deg.clear();
  for (std::size_t i = 0; i < num_views(); i += stride) out.angles_deg.push_back(angles_deg[i]);
  return out;
}

std::size_t default_detector_count(std::size_t rows, std::size_t cols) {
  auto n = static_cast<std::size_t>(
      std::ceil(std::numbers::sqrt2 * static_cast<double>(std::max(rows, cols))));
  return n + (n % 2);
}

Geometry standard_geometry(std::size_t rows, std::size_t cols, double pixel_spacing_mm,
                           std::size_t num_views) {
  Geometry g;
  g.angles_deg.resize(num_views);
  for (std::size_t i = 0; i < num_views; ++i) {
    g.angles_deg[i] = 180.0 * static_cast<double>(i) / static_cast<double>(num_views);
  }
  g.num_detectors = default_detector_count(rows, cols);
  g.detector_spacing_mm = pixel_spacing_mm;
  g.image_rows = rows;
  g.image_cols = cols;
  g.pixel_spacing_mm = pixel_spacing_mm;
  g.center_row = (static_cast<double>(rows) - 1.0) / 2.0;
  g.center_col = (static_cast<double>(cols) - 1.0) / 2.0;
  g.validate();
  return g;
}

void Sinogram::validate() const {
  geometry.validate();
  if (values.rows() != geometry.num_views() || values.cols() != geometry.num_detectors) {
    throw std::invalid_argument("sinogram shape does not match its geometry");
  }
  require_finite(values.values(), "sinogram");
}

AttenuationMap hu_to_attenuation(const Image& img, const PhysicsConstants& c) {
  img.validate();
  if (!(c.mu_water > 0.0)) throw std::invalid_argument("mu_water must be positive");
  AttenuationMap m{Grid<double>(img.height(), img.width()), img.pixel_spacing_mm};
  auto in = img.hu.values();
  auto out = m.mu.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = c.mu_water * (1.0 + std::max(in[i], kHuFloor) / 1000.0);
  }
  return m;
}

Image attenuation_to_hu(const AttenuationMap& m, const PhysicsConstants& c) {
  m.validate();
  if (!(c.mu_water > 0.0)) throw std::invalid_argument("mu_water must be positive");
  Image img{Grid<double>(m.height(), m.width()), m.pixel_spacing_mm};
  auto in = m.mu.values();
  auto out = img.hu.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1000.0 * (in[i] / c.mu_water - 1.0);
  return img;
}

Sinogram radon(const AttenuationMap& m, const Geometry& g) {
  m.validate();
  g.validate();
  if (m.height() != g.image_rows || m.width() != g.image_cols) {
    throw std::invalid_argument("attenuation map does not match the geometry's image grid");
  }
  if (std::abs(m.pixel_spacing_mm - g.pixel_spacing_mm) > 1e-9 * g.pixel_spacing_mm) {
    throw std::invalid_argument("attenuation map spacing differs from geometry");
  }

  const std::size_t rows = g.image_rows;
  const std::size_t cols = g.image_cols;
  const double ps = g.pixel_spacing_mm;
  const std::size_t nd = g.num_detectors;
  const double det_mid = (static_cast<double>(nd) - 1.0) / 2.0;

  // Largest distance from the rotation center to any grid corner, plus a pixel.
  double reach = 0.0;
  for (double r : {-0.5, static_cast<double>(rows) - 0.5}) {
    for (double c : {-0.5, static_cast<double>(cols) - 0.5}) {
      reach = std::max(reach, std::hypot(r - g.center_row, c - g.center_col));
    }
  }
  reach = (reach + 1.0) * ps;

  // Zero border of one pixel so bilinear taps never need bounds checks.
  const std::size_t pcols = cols + 2;
  std::vector<double> padded((rows + 2) * pcols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = m.mu.row(r);
    std::copy(src.begin(), src.end(), padded.begin() + static_cast<long>((r + 1) * pcols + 1));
  }

  Sinogram s{g, Grid<double>(g.num_views(), nd)};
  parallel_for(g.num_views(), [&](std::size_t v) {
    const double theta = deg_to_rad(g.angles_deg[v]);
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    auto out = s.values.row(v);
    for (std::size_t k = 0; k < nd; ++k) {
      const double t = (static_cast<double>(k) - det_mid) * g.detector_spacing_mm;
      if (std::abs(t) >= reach) continue;
      const double steps = std::ceil(std::sqrt(reach * reach - t * t) / ps);
      // point(l) = t*(cos, sin) + l*(-sin, cos) in mm, y up; l in pixel steps
      const double fc0 = g.center_col + t * cs / ps;
      const double fr0 = g.center_row - t * sn / ps;
      const double dc = -sn;
      const double dr = -cs;
      // Samples with a tap inside the grid satisfy -1 < f < n on both axes.
      double jlo = -steps;
      double jhi = steps;
      auto clip = [&](double f0, double d, double n) {
        constexpr double eps = 1e-9;
        if (std::abs(d) < 1e-12) {
          if (f0 <= -1.0 || f0 >= n) jhi = jlo - 1.0;
          return;
        }
        double a = (-1.0 + eps - f0) / d;
        double b = (n - eps - f0) / d;
        if (a > b) std::swap(a, b);
        jlo = std::max(jlo, std::ceil(a));
        jhi = std::min(jhi, std::floor(b));
      };
      clip(fr0, dr, static_cast<double>(rows));
      clip(fc0, dc, static_cast<double>(cols));
      double acc = 0.0;
      for (double j = jlo; j <= jhi; j += 1.0) {
        const double fr = fr0 + j * dr + 1.0;
        const double fc = fc0 + j * dc + 1.0;
        const double r0 = std::floor(fr);
        const double c0 = std::floor(fc);
        const double wr = fr - r0;
        const double wc = fc - c0;
        const double* p = padded.data() + static_cast<std::size_t>(r0) * pcols + static_cast<std::size_t>(c0);
        acc += (1.0 - wr) * ((1.0 - wc) * p[0] + wc * p[1]) +
               wr * ((1.0 - wc) * p[pcols] + wc * p[pcols + 1]);
      }
      out[k] = acc * ps;
    }
  });
  return s;
}

AttenuationMap fbp(const Sinogram& s) {
  s.validate();
  const Geometry& g = s.geometry;
  const std::size_t views = g.num_views();
  if (views < 2) throw std::invalid_argument("filtered backprojection needs at least 2 views");

  const std::size_t nd = g.num_detectors;
  const double ds = g.detector_spacing_mm;
  const std::size_t padded = next_pow2(2 * nd);
  detail::RealFft fft(padded);

  // Frequency response of the band-limited spatial ramp kernel.
  std::vector<double> response(fft.spectrum_size());
  {
    detail::FftwBuffer<double> kernel(padded);
    detail::FftwBuffer<fftw_complex> spectrum(fft.spectrum_size());
    const auto half = static_cast<long>(padded / 2);
    for (std::size_t i = 0; i < padded; ++i) {
      const long n = static_cast<long>(i) <= half ? static_cast<long>(i)
                                                   : static_cast<long>(i) - static_cast<long>(padded);
      double h = 0.0;
      if (n == 0) {
        h = 0.25 / (ds * ds);
      } else if (n % 2 != 0) {
        const double nn = static_cast<double>(n);
        h = -1.0 / (std::numbers::pi * std::numbers::pi * nn * nn * ds * ds);
      }
      kernel[i] = h;
    }
    fft.forward(kernel.get(), spectrum.get());
    for (std::size_t i = 0; i < response.size(); ++i) {
      response[i] = spectrum[i][0] * ds / static_cast<double>(padded);
    }
  }

  Grid<double> filtered(views, nd);
  parallel_for(views, [&](std::size_t v) {
    detail::FftwBuffer<double> line(padded);
    detail::FftwBuffer<fftw_complex> spectrum(fft.spectrum_size());
    auto row = s.values.row(v);
    for (std::size_t i = 0; i < padded; ++i) line[i] = i < nd ? row[i] : 0.0;
    fft.forward(line.get(), spectrum.get());
    for (std::size_t i = 0; i < response.size(); ++i) {
      spectrum[i][0] *= response[i];
      spectrum[i][1] *= response[i];
    }
    fft.inverse(spectrum.get(), line.get());
    auto out = filtered.row(v);
    for (std::size_t i = 0; i < nd; ++i) out[i] = line[i];
  });

  std::vector<double> cos_t(views), sin_t(views);
  for (std::size_t v = 0; v < views; ++v) {
    const double theta = deg_to_rad(g.angles_deg[v]);
    cos_t[v] = std::cos(theta);
    sin_t[v] = std::sin(theta);
  }

  const std::size_t rows = g.image_rows;
  const std::size_t cols = g.image_cols;
  const double ps = g.pixel_spacing_mm;
  const double det_mid = (static_cast<double>(nd) - 1.0) / 2.0;
  const double weight = std::numbers::pi / static_cast<double>(views);
  const Mask inside = reconstruction_mask(rows, cols);

  AttenuationMap out{Grid<double>(rows, cols), ps};
  parallel_for(rows, [&](std::size_t r) {
    auto dst = out.mu.row(r);
    const double y = (g.center_row - static_cast<double>(r)) * ps;
    std::vector<double> acc(cols, 0.0);
    for (std::size_t v = 0; v < views; ++v) {
      auto q = filtered.row(v);
      const double du = cos_t[v] * ps / ds;
      const double u0 = (-g.center_col * ps * cos_t[v] + y * sin_t[v]) / ds + det_mid;
      for (std::size_t c = 0; c < cols; ++c) {
        const double u = u0 + static_cast<double>(c) * du;
        const double fl = std::floor(u);
        const auto k = static_cast<long>(fl);
        if (k < 0 || k + 1 >= static_cast<long>(nd)) continue;
        const double w = u - fl;
        acc[c] += (1.0 - w) * q[static_cast<std::size_t>(k)] + w * q[static_cast<std::size_t>(k) + 1];
      }
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] = inside(r, c) ? acc[c] * weight : 0.0;
  });
  return out;
}

Mask reconstruction_mask(std::size_t rows, std::size_t cols) {
  Mask m(rows, cols, 0);
  const double cr = (static_cast<double>(rows) - 1.0) / 2.0;
  const double cc = (static_cast<double>(cols) - 1.0) / 2.0;
  const double radius = static_cast<double>(std::min(rows, cols)) / 2.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double dr = static_cast<double>(r) - cr;
      const double dc = static_cast<double>(c) - cc;
      m(r, c) = dr * dr + dc * dc <= radius * radius ? 1 : 0;
    }
  }
  return m;
}

}  // namespace ctdb
