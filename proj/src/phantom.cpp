#include "ctdb/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace ctdb {

namespace {

// Normalized coordinates: u to the right, v up, both in [-1, 1] across the frame.
struct Ellipse {
  double cu, cv;    // center
  double au, av;    // semi-axes
  double angle;     // radians, counter-clockwise
  double hu;

  [[nodiscard]] bool contains(double u, double v) const {
    const double du = u - cu;
    const double dv = v - cv;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double x = (c * du + s * dv) / au;
    const double y = (-s * du + c * dv) / av;
    return x * x + y * y <= 1.0;
  }
};

constexpr int kSuper = 4;

}  // namespace

Image make_phantom(std::size_t size, std::uint64_t seed) {
  if (size < 64) throw std::invalid_argument("phantom size must be at least 64");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  std::vector<Ellipse> shapes;
  const double body_au = uniform(0.80, 0.90);
  const double body_av = uniform(0.60, 0.72);
  const double body_cv = uniform(-0.04, 0.04);
  shapes.push_back({0.0, body_cv, body_au, body_av, 0.0, uniform(30.0, 50.0)});

  for (double side : {-1.0, 1.0}) {
    shapes.push_back({side * body_au * uniform(0.45, 0.60), body_cv + uniform(-0.15, 0.10),
                      body_au * uniform(0.12, 0.18), body_av * uniform(0.20, 0.30),
                      uniform(-0.4, 0.4), uniform(-750.0, -650.0)});
  }

  const int organs = std::uniform_int_distribution<int>(4, 8)(rng);
  for (int i = 0; i < organs; ++i) {
    const double r = 0.55 * std::sqrt(uniform(0.0, 1.0));
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    shapes.push_back({r * body_au * std::cos(phi), body_cv + r * body_av * std::sin(phi),
                      uniform(0.05, 0.20), uniform(0.05, 0.16), uniform(0.0, std::numbers::pi),
                      uniform(-150.0, 300.0)});
  }

  Image img{Grid<double>(size, size, -1000.0), kPhantomFovMm / static_cast<double>(size)};
  const double n = static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      double acc = 0.0;
      for (int sr = 0; sr < kSuper; ++sr) {
        for (int sc = 0; sc < kSuper; ++sc) {
          const double pr = static_cast<double>(r) + (sr + 0.5) / kSuper;
          const double pc = static_cast<double>(c) + (sc + 0.5) / kSuper;
          const double u = 2.0 * pc / n - 1.0;
          const double v = 1.0 - 2.0 * pr / n;
          double value = -1000.0;
          if (shapes.front().contains(u, v)) {
            for (const auto& e : shapes) {
              if (e.contains(u, v)) value = e.hu;
            }
          }
          acc += value;
        }
      }
      img.hu(r, c) = acc / (kSuper * kSuper);
    }
  }
  return img;
}

Mask body_support(const Image& img) {
  Mask m(img.height(), img.width(), 0);
  for (std::size_t i = 0; i < img.hu.size(); ++i) m.data()[i] = img.hu.data()[i] > -500.0 ? 1 : 0;
  return m;
}

}  // namespace ctdb
