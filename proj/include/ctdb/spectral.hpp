#pragma once

// Frequency-domain degradation descriptors.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "ctdb/grid.hpp"
#include "ctdb/tomo.hpp"

namespace ctdb {

/// log(1 + |F|) with the DC bin at (rows / 2, cols / 2).
struct Spectrum {
  Grid<double> values;
};

Spectrum log_magnitude_spectrum(const Image& img);

/// Normalized radial frequency above which a bin counts as high frequency.
/// Radius is measured so that the Nyquist frequency on either axis is 1.
inline constexpr double kHighFrequencyCutoff = 0.5;
inline constexpr std::size_t kSpectralBands = 8;

/// Fraction of AC energy (DC excluded, image mean removed) with normalized
/// radius > kHighFrequencyCutoff. Zero when the image has no AC energy.
double hf_energy_ratio(const Image& img);

/// Band energies stand in for a learned spectral encoder. Radial annuli split
/// normalized radius (0, sqrt(2)] evenly; angular sectors split orientation
/// [0, pi) evenly (the magnitude spectrum of a real image is point
/// symmetric). Each set of fractions sums to 1, or is all zero for an image
/// without AC energy.
struct SpectralDescriptor {
  std::array<double, kSpectralBands> radial{};
  std::array<double, kSpectralBands> angular{};
  double hf_ratio = 0.0;

  static constexpr std::size_t kValues = 2 * kSpectralBands + 1;

  /// radial, angular, hf_ratio as 17 little-endian f32 values.
  [[nodiscard]] std::array<std::uint8_t, 4 * kValues> to_bytes() const;
  static SpectralDescriptor from_bytes(std::span<const std::uint8_t> bytes);
  [[nodiscard]] std::string to_hex() const;
  static SpectralDescriptor from_hex(const std::string& hex);
};

SpectralDescriptor spectral_descriptor(const Image& img);

}  // namespace ctdb
