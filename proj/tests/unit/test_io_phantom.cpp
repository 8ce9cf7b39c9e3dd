#include <cstring>
#include <random>

#include "ctdb/io.hpp"
#include "ctdb/parallel.hpp"
#include "ctdb/phantom.hpp"
#include "ctdb/seed.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ctdb;

TEST_CASE("CTDI layout is little-endian with the documented header") {
  Image img{Grid<double>(2, 3), 0.5};
  for (std::size_t i = 0; i < 6; ++i) img.hu.data()[i] = static_cast<double>(i) - 2.0;
  const auto bytes = encode_image(img);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 4 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "CTDI", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 3);
  float spacing = 0.0f;
  std::memcpy(&spacing, bytes.data() + 16, 4);
  CHECK(spacing == 0.5f);
  const auto back = decode_image(bytes);
  CHECK(back.hu == img.hu);
  CHECK(back.pixel_spacing_mm == 0.5);
}

TEST_CASE("CTDS round trip keeps angles and values at f32 precision") {
  const auto g = standard_geometry(64, 64, 1.25, 45);
  Sinogram s{g, Grid<double>(g.num_views(), g.num_detectors)};
  std::mt19937_64 rng(2);
  const auto v = test::random_vector(rng, s.values.size(), 0.0, 5.0);
  std::copy(v.begin(), v.end(), s.values.data());
  const auto back = decode_sinogram(encode_sinogram(s), 64);
  CHECK(back.geometry.num_views() == 45);
  CHECK(back.geometry.num_detectors == g.num_detectors);
  CHECK(back.geometry.image_rows == 64);
  for (std::size_t k = 0; k < 45; ++k) CHECK(back.geometry.angles_deg[k] == static_cast<float>(g.angles_deg[k]));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.values.data()[i] == static_cast<float>(v[i]));
}

TEST_CASE("CTDS without an image size assumes the inscribed square grid") {
  const auto g = standard_geometry(100, 100, 1.0, 4);
  const Sinogram s{g, Grid<double>(4, g.num_detectors)};
  const auto back = decode_sinogram(encode_sinogram(s));
  CHECK(back.geometry.image_rows == 100);
  CHECK(back.geometry.image_cols == 100);
}

TEST_CASE("corrupt containers are rejected") {
  Image img{Grid<double>(2, 2), 1.0};
  auto bytes = encode_image(img);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_image(bad_magic), std::runtime_error);
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_image(bad_version), std::runtime_error);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_image(truncated), std::runtime_error);
  CHECK_THROWS_AS(read_image("/nonexistent/file.ctdi"), std::runtime_error);
}

TEST_CASE("images survive a file round trip") {
  const auto dir = test::temp_dir("io");
  const auto img = make_phantom(64, 1);
  write_image(dir / "a.ctdi", img);
  const auto back = read_image(dir / "a.ctdi");
  for (std::size_t i = 0; i < img.hu.size(); ++i) CHECK(back.hu.data()[i] == static_cast<float>(img.hu.data()[i]));
  CHECK_FALSE(std::filesystem::exists(dir / "a.ctdi.tmp"));
}

TEST_CASE("phantoms are deterministic per seed") {
  const auto a = make_phantom(96, 42);
  const auto b = make_phantom(96, 42);
  const auto c = make_phantom(96, 43);
  CHECK(a.hu == b.hu);
  CHECK_FALSE(a.hu == c.hu);
  CHECK(a.pixel_spacing_mm == doctest::Approx(kPhantomFovMm / 96.0));
}

TEST_CASE("phantom values stay within the construction bounds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = make_phantom(64, seed);
    for (double v : img.hu.values()) {
      CHECK(v >= -1000.0);
      CHECK(v <= 400.0);
    }
    CHECK(img.hu(0, 0) == -1000.0);
  }
}

TEST_CASE("phantom body support covers 30 to 70 percent of the frame") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto img = make_phantom(64, seed);
    const auto support = body_support(img);
    std::size_t n = 0;
    for (auto v : support.values()) n += v ? 1 : 0;
    const double fraction = static_cast<double>(n) / static_cast<double>(support.size());
    CHECK(fraction >= 0.3);
    CHECK(fraction <= 0.7);
  }
}

TEST_CASE("phantom contains soft tissue and lung-like regions") {
  const auto img = make_phantom(128, 9);
  std::size_t lung = 0;
  std::size_t tissue = 0;
  for (double v : img.hu.values()) {
    if (v > -800.0 && v < -600.0) ++lung;
    if (v > 20.0 && v < 60.0) ++tissue;
  }
  CHECK(lung > 100);
  CHECK(tissue > 1000);
}

TEST_CASE("undersized phantoms are rejected") { CHECK_THROWS_AS(make_phantom(32, 0), std::invalid_argument); }

TEST_CASE("seed derivation is order sensitive and stable") {
  CHECK(combine_seed({1, 2}) != combine_seed({2, 1}));
  CHECK(derive_seed(5, "noise") == derive_seed(5, "noise"));
  CHECK(derive_seed(5, "noise") != derive_seed(5, "blur"));
  static_assert(fnv1a("") == 0xcbf29ce484222325ULL);
  static_assert(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  set_thread_count(4);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}
