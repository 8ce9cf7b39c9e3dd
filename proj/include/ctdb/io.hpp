#pragma once

// Binary image (CTDI) and sinogram (CTDS) containers. All fields little-endian.
//
//   CTDI: "CTDI" u32 version=1, u32 H, u32 W, f32 pixel_spacing_mm, H*W f32 HU
//   CTDS: "CTDS" u32 version=1, u32 views, u32 detectors, f32 detector_spacing_mm,
//         views f32 angles (deg), views*detectors f32 values

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ctdb/tomo.hpp"

namespace ctdb {

inline constexpr std::uint32_t kFormatVersion = 1;

std::vector<std::uint8_t> encode_image(const Image& img);
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_sinogram(const Sinogram& s);

/// The CTDS container does not carry the image grid. When `image_size` is
/// absent, a square grid of floor(detectors * spacing / sqrt(2)) pixels at the
/// detector spacing is assumed, centered on the detector array.
Sinogram decode_sinogram(std::span<const std::uint8_t> bytes,
                         std::optional<std::size_t> image_size = std::nullopt);

void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);
void write_sinogram(const std::filesystem::path& path, const Sinogram& s);
Sinogram read_sinogram(const std::filesystem::path& path,
                       std::optional<std::size_t> image_size = std::nullopt);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

namespace le {
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

/// Sequential little-endian reader; throws std::runtime_error on truncation.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  std::span<const std::uint8_t> take(std::size_t n);
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};
}  // namespace le

}  // namespace ctdb
