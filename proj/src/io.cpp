#include "ctdb/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace ctdb {

namespace le {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xffu));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (remaining() < n) throw std::runtime_error("truncated input");
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint16_t Reader::u16() {
  auto b = take(2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t Reader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

}  // namespace le

namespace {

void expect_magic(le::Reader& in, const char (&magic)[5]) {
  auto m = in.take(4);
  if (std::memcmp(m.data(), magic, 4) != 0) {
    throw std::runtime_error(std::string("bad magic, expected ") + magic);
  }
  if (auto version = in.u32(); version != kFormatVersion) {
    throw std::runtime_error("unsupported format version " + std::to_string(version));
  }
}

void put_magic(std::vector<std::uint8_t>& out, const char (&magic)[5]) {
  out.insert(out.end(), magic, magic + 4);
  le::put_u32(out, kFormatVersion);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw std::invalid_argument("dimension exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_image(const Image& img) {
  img.validate();
  std::vector<std::uint8_t> out;
  out.reserve(20 + 4 * img.hu.size());
  put_magic(out, "CTDI");
  le::put_u32(out, checked_u32(img.height()));
  le::put_u32(out, checked_u32(img.width()));
  le::put_f32(out, static_cast<float>(img.pixel_spacing_mm));
  for (double v : img.hu.values()) le::put_f32(out, static_cast<float>(v));
  return out;
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  le::Reader in(bytes);
  expect_magic(in, "CTDI");
  const std::size_t h = in.u32();
  const std::size_t w = in.u32();
  const double spacing = in.f32();
  if (in.remaining() != 4 * h * w) throw std::runtime_error("CTDI payload size mismatch");
  Image img{Grid<double>(h, w), spacing};
  for (double& v : img.hu.values()) v = in.f32();
  img.validate();
  return img;
}

std::vector<std::uint8_t> encode_sinogram(const Sinogram& s) {
  s.validate();
  std::vector<std::uint8_t> out;
  put_magic(out, "CTDS");
  le::put_u32(out, checked_u32(s.geometry.num_views()));
  le::put_u32(out, checked_u32(s.geometry.num_detectors));
  le::put_f32(out, static_cast<float>(s.geometry.detector_spacing_mm));
  for (double a : s.geometry.angles_deg) le::put_f32(out, static_cast<float>(a));
  for (double v : s.values.values()) le::put_f32(out, static_cast<float>(v));
  return out;
}

Sinogram decode_sinogram(std::span<const std::uint8_t> bytes, std::optional<std::size_t> image_size) {
  le::Reader in(bytes);
  expect_magic(in, "CTDS");
  const std::size_t views = in.u32();
  const std::size_t detectors = in.u32();
  const double spacing = in.f32();
  if (in.remaining() != 4 * views * (detectors + 1)) {
    throw std::runtime_error("CTDS payload size mismatch");
  }
  Sinogram s;
  s.geometry.num_detectors = detectors;
  s.geometry.detector_spacing_mm = spacing;
  s.geometry.angles_deg.resize(views);
  for (double& a : s.geometry.angles_deg) a = in.f32();
  const std::size_t n = image_size.value_or(static_cast<std::size_t>(
      std::floor(static_cast<double>(detectors) / std::sqrt(2.0))));
  s.geometry.image_rows = n;
  s.geometry.image_cols = n;
  s.geometry.pixel_spacing_mm = spacing;
  s.geometry.center_row = (static_cast<double>(n) - 1.0) / 2.0;
  s.geometry.center_col = s.geometry.center_row;
  s.values = Grid<double>(views, detectors);
  for (double& v : s.values.values()) v = in.f32();
  s.validate();
  return s;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!f) throw std::runtime_error("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_image(const std::filesystem::path& path, const Image& img) {
  write_file(path, encode_image(img));
}

Image read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

void write_sinogram(const std::filesystem::path& path, const Sinogram& s) {
  write_file(path, encode_sinogram(s));
}

Sinogram read_sinogram(const std::filesystem::path& path, std::optional<std::size_t> image_size) {
  return decode_sinogram(read_file(path), image_size);
}

}  // namespace ctdb
