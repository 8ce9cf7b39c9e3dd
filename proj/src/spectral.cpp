#include "ctdb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ctdb/io.hpp"
#include "fft.hpp"

namespace ctdb {

namespace {

double frequency(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (2 * k < n) ? kk / nn : (kk - nn) / nn;
}

// Power spectrum of the mean-removed image with its per-bin coordinates.
struct AcPower {
  Grid<double> power;
  Grid<double> radius;  // normalized: Nyquist on an axis is 1
  Grid<double> angle;   // [0, pi)
};

AcPower ac_power(const Image& img) {
  img.validate();
  Grid<double> x = img.hu;
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x.values()) v -= mean;

  const auto f = detail::fft2(x);
  AcPower out{Grid<double>(x.rows(), x.cols()), Grid<double>(x.rows(), x.cols()),
              Grid<double>(x.rows(), x.cols())};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double fy = frequency(r, x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double fx = frequency(c, x.cols());
      out.power(r, c) = (r == 0 && c == 0) ? 0.0 : std::norm(f(r, c));
      out.radius(r, c) = std::hypot(2.0 * fy, 2.0 * fx);
      double phi = std::atan2(fy, fx);
      if (phi < 0.0) phi += std::numbers::pi;
      if (phi >= std::numbers::pi) phi -= std::numbers::pi;
      out.angle(r, c) = phi;
    }
  }
  return out;
}

}  // namespace

Spectrum log_magnitude_spectrum(const Image& img) {
  img.validate();
  const auto f = detail::fft2(img.hu);
  const std::size_t rows = f.rows();
  const std::size_t cols = f.cols();
  Spectrum s{Grid<double>(rows, cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      s.values((r + rows / 2) % rows, (c + cols / 2) % cols) = std::log1p(std::abs(f(r, c)));
    }
  }
  return s;
}

double hf_energy_ratio(const Image& img) {
  const auto p = ac_power(img);
  double total = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < p.power.size(); ++i) {
    total += p.power.data()[i];
    if (p.radius.data()[i] > kHighFrequencyCutoff) high += p.power.data()[i];
  }
  return total > 0.0 ? high / total : 0.0;
}

SpectralDescriptor spectral_descriptor(const Image& img) {
  const auto p = ac_power(img);
  SpectralDescriptor d;
  const double radial_width = std::numbers::sqrt2 / static_cast<double>(kSpectralBands);
  const double angular_width = std::numbers::pi / static_cast<double>(kSpectralBands);
  double total = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < p.power.size(); ++i) {
    const double e = p.power.data()[i];
    if (e == 0.0) continue;
    auto band = [](double v, double width) {
      return std::min(kSpectralBands - 1, static_cast<std::size_t>(v / width));
    };
    d.radial[band(p.radius.data()[i], radial_width)] += e;
    d.angular[band(p.angle.data()[i], angular_width)] += e;
    total += e;
    if (p.radius.data()[i] > kHighFrequencyCutoff) high += e;
  }
  if (total > 0.0) {
    for (double& v : d.radial) v /= total;
    for (double& v : d.angular) v /= total;
    d.hf_ratio = high / total;
  }
  return d;
}

std::array<std::uint8_t, 4 * SpectralDescriptor::kValues> SpectralDescriptor::to_bytes() const {
  std::vector<std::uint8_t> buf;
  for (double v : radial) le::put_f32(buf, static_cast<float>(v));
  for (double v : angular) le::put_f32(buf, static_cast<float>(v));
  le::put_f32(buf, static_cast<float>(hf_ratio));
  std::array<std::uint8_t, 4 * kValues> out{};
  std::copy(buf.begin(), buf.end(), out.begin());
  return out;
}

SpectralDescriptor SpectralDescriptor::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 4 * kValues) throw std::invalid_argument("spectral descriptor needs 68 bytes");
  le::Reader in(bytes);
  SpectralDescriptor d;
  for (double& v : d.radial) v = in.f32();
  for (double& v : d.angular) v = in.f32();
  d.hf_ratio = in.f32();
  return d;
}

std::string SpectralDescriptor::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  for (auto b : to_bytes()) {
    hex.push_back(kDigits[b >> 4]);
    hex.push_back(kDigits[b & 0x0f]);
  }
  return hex;
}

SpectralDescriptor SpectralDescriptor::from_hex(const std::string& hex) {
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("invalid hex digit");
  };
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    bytes.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  }
  return from_bytes(bytes);
}

}  // namespace ctdb
