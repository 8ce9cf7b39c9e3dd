#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ctdb/iqa.hpp"

namespace ctdb {

namespace {

void check_pair(const Image& ref, const Image& deg, const Mask& mask) {
  ref.validate();
  deg.validate();
  if (!ref.hu.same_shape(deg.hu)) throw std::invalid_argument("image shapes differ");
  if (mask.rows() != ref.height() || mask.cols() != ref.width()) {
    throw std::invalid_argument("mask shape differs from image");
  }
}

Grid<double> normalized(const Image& img, const IntensityWindow& w, double scale) {
  Grid<double> out(img.height(), img.width());
  const double inv = scale / (w.hi - w.lo);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = (img.hu.data()[i] - w.lo) * inv;
  return out;
}

std::vector<double> gaussian_taps(std::size_t size, double sigma) {
  std::vector<double> taps(size);
  const double half = (static_cast<double>(size) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - half;
    taps[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable 'valid' correlation: output (rows - n + 1) x (cols - n + 1).
Grid<double> filter_valid(const Grid<double>& x, const std::vector<double>& taps) {
  const std::size_t n = taps.size();
  if (x.rows() < n || x.cols() < n) throw std::invalid_argument("image too small for filter window");
  const std::size_t out_rows = x.rows() - n + 1;
  const std::size_t out_cols = x.cols() - n + 1;
  Grid<double> tmp(x.rows(), out_cols);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = tmp.row(r);
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += taps[k] * src[c + k];
      dst[c] = acc;
    }
  }
  Grid<double> out(out_rows, out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    auto dst = out.row(r);
    for (std::size_t k = 0; k < n; ++k) {
      auto src = tmp.row(r + k);
      for (std::size_t c = 0; c < out_cols; ++c) dst[c] += taps[k] * src[c];
    }
  }
  return out;
}

Grid<double> product(const Grid<double>& a, const Grid<double>& b) {
  Grid<double> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

template <typename T>
Grid<T> decimate(const Grid<T>& x, std::size_t offset) {
  const std::size_t rows = (x.rows() - 2 * offset + 1) / 2;
  const std::size_t cols = (x.cols() - 2 * offset + 1) / 2;
  Grid<T> out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = x(offset + 2 * r, offset + 2 * c);
  }
  return out;
}

}  // namespace

IntensityWindow reference_window(const Image& ref, const Mask& mask) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < ref.hu.size(); ++i) {
    if (!mask.data()[i]) continue;
    lo = std::min(lo, ref.hu.data()[i]);
    hi = std::max(hi, ref.hu.data()[i]);
  }
  if (!(hi >= lo)) throw std::invalid_argument("mask selects no pixels");
  if (hi == lo) hi = lo + 1.0;
  return {lo, hi};
}

double psnr(const Image& ref, const Image& deg, const Mask& mask, std::optional<double> data_range) {
  check_pair(ref, deg, mask);
  double se = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ref.hu.size(); ++i) {
    if (!mask.data()[i]) continue;
    const double d = ref.hu.data()[i] - deg.hu.data()[i];
    se += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mask selects no pixels");
  const IntensityWindow w = reference_window(ref, mask);
  const double range = data_range.value_or(w.hi - w.lo);
  if (!(range > 0.0)) throw std::invalid_argument("data range must be positive");
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(range / std::sqrt(se / static_cast<double>(n)));
}

double psnr(const Image& ref, const Image& deg) {
  return psnr(ref, deg, reconstruction_mask(ref.height(), ref.width()));
}

double ssim(const Image& ref, const Image& deg, const Mask& mask, std::optional<IntensityWindow> window) {
  check_pair(ref, deg, mask);
  const IntensityWindow w = window.value_or(reference_window(ref, mask));
  if (!(w.hi > w.lo)) throw std::invalid_argument("intensity window must have positive width");
  const Grid<double> x = normalized(ref, w, 1.0);
  const Grid<double> y = normalized(deg, w, 1.0);
  const auto taps = gaussian_taps(kSsimWindow, kSsimSigma);

  const Grid<double> mx = filter_valid(x, taps);
  const Grid<double> my = filter_valid(y, taps);
  const Grid<double> sxx = filter_valid(product(x, x), taps);
  const Grid<double> syy = filter_valid(product(y, y), taps);
  const Grid<double> sxy = filter_valid(product(x, y), taps);

  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::size_t half = kSsimWindow / 2;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < mx.rows(); ++r) {
    for (std::size_t c = 0; c < mx.cols(); ++c) {
      if (!mask(r + half, c + half)) continue;
      const double ux = mx(r, c);
      const double uy = my(r, c);
      const double vx = sxx(r, c) - ux * ux;
      const double vy = syy(r, c) - uy * uy;
      const double cxy = sxy(r, c) - ux * uy;
      total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) /
               ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("no SSIM window fits inside the mask");
  return total / static_cast<double>(n);
}

double ssim(const Image& ref, const Image& deg) {
  return ssim(ref, deg, reconstruction_mask(ref.height(), ref.width()));
}

double vif(const Image& ref, const Image& deg, const Mask& mask, std::optional<IntensityWindow> window) {
  check_pair(ref, deg, mask);
  const IntensityWindow w = window.value_or(reference_window(ref, mask));
  if (!(w.hi > w.lo)) throw std::invalid_argument("intensity window must have positive width");
  Grid<double> x = normalized(ref, w, 255.0);
  Grid<double> y = normalized(deg, w, 255.0);
  Mask m = mask;

  constexpr double eps = 1e-10;
  double num = 0.0;
  double den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const std::size_t size = (std::size_t{1} << (4 - scale + 1)) + 1;
    const std::size_t half = size / 2;
    const auto taps = gaussian_taps(size, static_cast<double>(size) / 5.0);
    if (scale > 1) {
      x = decimate(filter_valid(x, taps), 0);
      y = decimate(filter_valid(y, taps), 0);
      m = decimate(m, half);
    }
    const Grid<double> mx = filter_valid(x, taps);
    const Grid<double> my = filter_valid(y, taps);
    const Grid<double> sxx = filter_valid(product(x, x), taps);
    const Grid<double> syy = filter_valid(product(y, y), taps);
    const Grid<double> sxy = filter_valid(product(x, y), taps);
    for (std::size_t r = 0; r < mx.rows(); ++r) {
      for (std::size_t c = 0; c < mx.cols(); ++c) {
        if (!m(r + half, c + half)) continue;
        double s1 = std::max(0.0, sxx(r, c) - mx(r, c) * mx(r, c));
        const double s2 = std::max(0.0, syy(r, c) - my(r, c) * my(r, c));
        const double s12 = sxy(r, c) - mx(r, c) * my(r, c);
        double g = s12 / (s1 + eps);
        double sv = s2 - g * s12;
        if (s1 < eps) {
          g = 0.0;
          sv = s2;
          s1 = 0.0;
        }
        if (s2 < eps) {
          g = 0.0;
          sv = 0.0;
        }
        if (g < 0.0) {
          sv = s2;
          g = 0.0;
        }
        sv = std::max(sv, eps);
        num += std::log10(1.0 + g * g * s1 / (sv + kVifNoiseVariance));
        den += std::log10(1.0 + s1 / kVifNoiseVariance);
      }
    }
  }
  if (!(den > 0.0)) throw std::invalid_argument("reference image carries no information for VIF");
  return num / den;
}

double vif(const Image& ref, const Image& deg) {
  return vif(ref, deg, reconstruction_mask(ref.height(), ref.width()));
}

}  // namespace ctdb
