#pragma once

// Helpers shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ctdb/grid.hpp"
#include "ctdb/tomo.hpp"

namespace ctdb::test {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int classes) {
  std::uniform_int_distribution<int> u(0, classes - 1);
  std::vector<int> v(n);
  for (int& x : v) x = u(rng);
  return v;
}

inline Image random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Image img{Grid<double>(rows, cols), 1.0};
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& x : img.hu.values()) x = u(rng);
  return img;
}

inline Image constant_image(std::size_t rows, std::size_t cols, double value, double spacing = 1.0) {
  return {Grid<double>(rows, cols, value), spacing};
}

/// Attenuation map of a disk of value `mu` centered on the grid.
inline AttenuationMap centered_disk(std::size_t size, double radius_px, double mu, double spacing = 1.0) {
  AttenuationMap m{Grid<double>(size, size), spacing};
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t k = 0; k < size; ++k) {
      const double dr = static_cast<double>(r) - c;
      const double dc = static_cast<double>(k) - c;
      if (dr * dr + dc * dc <= radius_px * radius_px) m.mu(r, k) = mu;
    }
  }
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ctdb_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ctdb::test
