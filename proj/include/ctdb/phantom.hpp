#pragma once

#include <cstddef>
#include <cstdint>

#include "ctdb/tomo.hpp"

namespace ctdb {

/// Field of view shared by all phantom sizes, so line-integral magnitudes (and
/// therefore photon statistics) do not depend on the grid resolution.
inline constexpr double kPhantomFovMm = 360.0;

/// Abdomen-like ellipse phantom in HU: body ellipse (~40 HU), two lateral
/// low-attenuation regions (~-700 HU), 4-8 random organ ellipses in
/// [-150, 300] HU, air background at -1000 HU. Edges are area-weighted with
/// 4x4 supersampling. Deterministic per (size, seed); size must be >= 64.
Image make_phantom(std::size_t size, std::uint64_t seed);

/// Pixels above -500 HU.
Mask body_support(const Image& img);

}  // namespace ctdb
