#include <cmath>
#include <limits>
#include <random>

#include "ctdb/degrade.hpp"
#include "ctdb/iqa.hpp"
#include "ctdb/phantom.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ctdb;

namespace {

Mask full_mask(std::size_t rows, std::size_t cols) { return Mask(rows, cols, 1); }

// Direct 2-D weighted-window SSIM on the [lo, hi] -> [0, 1] scale.
double brute_ssim(const Image& a, const Image& b, double lo, double hi) {
  const int n = 11;
  std::vector<double> w(n * n);
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double di = i - 5.0;
      const double dj = j - 5.0;
      w[i * n + j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      wsum += w[i * n + j];
    }
  }
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  int count = 0;
  const int rows = static_cast<int>(a.height());
  const int cols = static_cast<int>(a.width());
  for (int r = 5; r + 5 < rows; ++r) {
    for (int c = 5; c + 5 < cols; ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double k = w[i * n + j] / wsum;
          mx += k * (a.hu(r + i - 5, c + j - 5) - lo) / (hi - lo);
          my += k * (b.hu(r + i - 5, c + j - 5) - lo) / (hi - lo);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double k = w[i * n + j] / wsum;
          const double dx = (a.hu(r + i - 5, c + j - 5) - lo) / (hi - lo) - mx;
          const double dy = (b.hu(r + i - 5, c + j - 5) - lo) / (hi - lo) - my;
          vx += k * dx * dx;
          vy += k * dy * dy;
          cxy += k * dx * dy;
        }
      }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

Image blurred(const Image& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const long radius = static_cast<long>(k.size() / 2);
  const long rows = static_cast<long>(img.height());
  const long cols = static_cast<long>(img.width());
  auto clampi = [](long v, long n) { return std::clamp(v, 0L, n - 1); };
  Image tmp = img;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (long j = -radius; j <= radius; ++j) acc += k[j + radius] * img.hu(r, clampi(c + j, cols));
      tmp.hu(r, c) = acc;
    }
  }
  Image out = tmp;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (long j = -radius; j <= radius; ++j) acc += k[j + radius] * tmp.hu(clampi(r + j, rows), c);
      out.hu(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("PSNR matches the closed form for a constant offset") {
  std::mt19937_64 rng(3);
  const auto ref = test::random_image(rng, 32, 32, -200.0, 300.0);
  const auto mask = full_mask(32, 32);
  double lo = 1e300, hi = -1e300;
  for (double v : ref.hu.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double offset : {1.0, 7.5, 40.0}) {
    Image deg = ref;
    for (double& v : deg.hu.values()) v += offset;
    CHECK(psnr(ref, deg, mask) == doctest::Approx(20.0 * std::log10((hi - lo) / offset)).epsilon(1e-12));
    CHECK(psnr(ref, deg, mask, 1000.0) == doctest::Approx(20.0 * std::log10(1000.0 / offset)).epsilon(1e-12));
  }
  CHECK(psnr(ref, ref, mask) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(psnr(ref, ref, mask, 0.0), std::invalid_argument);
}

TEST_CASE("metrics only see pixels inside the mask") {
  const auto ref = make_phantom(64, 1);
  Image deg = ref;
  deg.hu(0, 0) += 500.0;  // corner lies outside the reconstruction circle
  CHECK(psnr(ref, deg) == std::numeric_limits<double>::infinity());
  CHECK(ssim(ref, deg) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vif(ref, deg) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("SSIM equals a direct windowed computation") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = test::random_image(rng, 24, 29, 0.0, 100.0);
    auto b = a;
    const auto noise = test::random_vector(rng, b.hu.size(), -20.0, 20.0);
    for (std::size_t i = 0; i < noise.size(); ++i) b.hu.data()[i] += noise[i];
    const IntensityWindow w{-10.0, 110.0};
    CHECK(ssim(a, b, full_mask(24, 29), w) == doctest::Approx(brute_ssim(a, b, -10.0, 110.0)).epsilon(1e-12));
  }
}

TEST_CASE("SSIM of constant images depends only on the mean difference") {
  const double c1 = 0.01 * 0.01;
  for (double d : {0.0, 0.05, 0.3}) {
    const auto a = test::constant_image(20, 20, 0.0);
    const auto b = test::constant_image(20, 20, d);
    CHECK(ssim(a, b, full_mask(20, 20), IntensityWindow{0.0, 1.0}) == doctest::Approx(c1 / (d * d + c1)).epsilon(1e-12));
  }
}

TEST_CASE("SSIM is symmetric under a shared window and 1 for identical images") {
  std::mt19937_64 rng(9);
  const auto a = test::random_image(rng, 40, 40, -100.0, 100.0);
  const auto b = test::random_image(rng, 40, 40, -100.0, 100.0);
  const IntensityWindow w{-100.0, 100.0};
  const auto mask = full_mask(40, 40);
  CHECK(ssim(a, b, mask, w) == doctest::Approx(ssim(b, a, mask, w)).epsilon(1e-14));
  CHECK(ssim(a, a, mask) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(ssim(a, b, mask, IntensityWindow{1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ssim(test::constant_image(8, 8, 0.0), test::constant_image(8, 8, 0.0), full_mask(8, 8)),
                  std::invalid_argument);
}

TEST_CASE("mismatched shapes are rejected") {
  const auto a = test::constant_image(32, 32, 0.0);
  const auto b = test::constant_image(32, 31, 0.0);
  CHECK_THROWS_AS(psnr(a, b, full_mask(32, 32)), std::invalid_argument);
  CHECK_THROWS_AS(ssim(a, a, full_mask(31, 32)), std::invalid_argument);
  CHECK_THROWS_AS(psnr(a, a, Mask(32, 32, 0)), std::invalid_argument);
}

TEST_CASE("VIF is 1 for identical images and falls with blur") {
  const auto ref = make_phantom(128, 2);
  CHECK(vif(ref, ref) == doctest::Approx(1.0).epsilon(1e-9));
  double previous = 1.0;
  for (double sigma : {0.8, 1.5, 3.0, 6.0}) {
    const double v = vif(ref, blurred(ref, sigma));
    CHECK(v < previous);
    previous = v;
  }
  CHECK(previous < 0.5);
}

TEST_CASE("VIF rejects a reference without information") {
  const auto flat = test::constant_image(64, 64, 40.0);
  std::mt19937_64 rng(1);
  const auto noisy = test::random_image(rng, 64, 64, 0.0, 80.0);
  CHECK_THROWS_AS(vif(flat, noisy), std::invalid_argument);
}

TEST_CASE("SSIM falls with additive noise") {
  const auto ref = make_phantom(96, 5);
  std::mt19937_64 rng(4);
  double previous = 1.0;
  for (double amp : {5.0, 20.0, 80.0}) {
    Image deg = ref;
    const auto n = test::random_vector(rng, deg.hu.size(), -amp, amp);
    for (std::size_t i = 0; i < n.size(); ++i) deg.hu.data()[i] += n[i];
    const double s = ssim(ref, deg);
    CHECK(s < previous);
    previous = s;
  }
}
