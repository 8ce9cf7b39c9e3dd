#pragma once

// Physics-informed degradation operators, severity calibration and mixtures.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctdb/grid.hpp"
#include "ctdb/tomo.hpp"

namespace ctdb {

enum class DegradationKind { noise, blur, streak, aliasing, metal };

std::string_view to_string(DegradationKind kind);
/// Accepts "noise", "blur", "streak", "aliasing", "metal"; throws otherwise.
DegradationKind parse_kind(std::string_view name);

/// Ordinal severity L0 (weakest) .. L3 (strongest).
class SeverityLevel {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 3;

  constexpr SeverityLevel() = default;
  explicit SeverityLevel(int level);

  [[nodiscard]] constexpr int value() const noexcept { return level_; }
  auto operator<=>(const SeverityLevel&) const = default;

 private:
  int level_ = 0;
};

struct NoiseParams {
  double incident_intensity = 2.0e5;  // I0, photons
  double dose_scale = 1.0;            // alpha
  double electronic_sigma = 10.0;     // counts
  double log_floor = 0.1;             // delta, counts
  double residual_scale = 1.0;        // gamma

  void validate() const;
};

struct NoiseDiagnostics {
  std::size_t clamped_cells = 0;  // cells with s < 0 clamped before exponentiation
};

/// Mixed Poisson-Gaussian photon noise in the projection domain with the
/// residual amplified by `residual_scale`. Cells are drawn in row-major order
/// from one stream seeded by `seed`.
Sinogram apply_noise(const Sinogram& s, const NoiseParams& p, std::uint64_t seed,
                     NoiseDiagnostics* diagnostics = nullptr);

/// Normalized sampled Gaussian of radius ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Gaussian convolution along the detector axis with half-sample symmetric
/// boundaries. The view axis is untouched.
Sinogram apply_blur(const Sinogram& s, double sigma_bins);

struct StreakParams {
  double delta_l = 0.0;
  Mask mask;  // num_views x num_detectors
};

inline constexpr std::size_t kStreakSegments = 6;
inline constexpr std::size_t kStreakSegmentBins = 3;

/// Six runs of three adjacent detector bins, each on one random view. Runs are
/// placed on detectors whose rays cross the reconstruction circle. Severity is
/// carried by delta_l alone, so the mask depends only on the seed.
Mask make_streak_mask(const Geometry& g, std::uint64_t seed);

/// s + delta_l * mask.
Sinogram apply_streaks(const Sinogram& s, const StreakParams& p);

/// Sparse-view projection over every (num_views / n_views)-th angle of `g`.
Sinogram apply_aliasing(const AttenuationMap& m, const Geometry& g, std::size_t n_views);

/// Inclusive pixel bounds.
struct BoundingBox {
  std::size_t row_min = 0;
  std::size_t col_min = 0;
  std::size_t row_max = 0;
  std::size_t col_max = 0;

  bool operator==(const BoundingBox&) const = default;
};

std::optional<BoundingBox> mask_bounding_box(const Mask& mask);

struct MetalParams {
  Mask mask;
  double mu_metal = 0.2;  // mm^-1, titanium-like
};

struct MetalInsertion {
  AttenuationMap map;
  std::optional<BoundingBox> bbox;  // empty when the mask selects nothing
};

/// (1 - m) * mu + m * mu_metal.
MetalInsertion insert_metal(const AttenuationMap& m, const MetalParams& p);

/// Pixels within `radius` of (center_row, center_col).
Mask disk_mask(std::size_t rows, std::size_t cols, double center_row, double center_col,
               double radius);

/// Disk of the level's radius centered on a uniformly drawn body-support pixel
/// (> -500 HU) of `ref`. Throws if the image has no body support.
Mask make_metal_mask(const Image& ref, double radius_px, std::uint64_t seed);

/// A per-level operator parameter: gamma, sigma, delta_L, view count, or
/// metal disk radius in pixels.
struct SeverityParam {
  DegradationKind kind;
  std::string_view name;
  double value;
};

SeverityParam severity_params(DegradationKind kind, SeverityLevel level);

enum class MixtureKind { blur_noise, streak_noise, metal_noise, aliasing_noise, metal_blur_noise };

/// "b+n", "s+n", "m+n", "a+n", "m+b+n".
std::string_view to_string(MixtureKind kind);
MixtureKind parse_mixture(std::string_view name);

/// Component kinds in application order.
std::vector<DegradationKind> mixture_components(MixtureKind kind);

/// Each component drawn uniformly from {global - 1, global} clipped to
/// [0, 3]; if none hit the global level, one drawn index is raised to it.
std::vector<SeverityLevel> sample_component_levels(SeverityLevel global, std::size_t k,
                                                   std::uint64_t seed);

/// Shared settings of the simulated scanner.
struct PipelineContext {
  PhysicsConstants physics;
  NoiseParams noise;  // residual_scale is replaced per level
  double mu_metal = 0.2;
  std::size_t full_views = kFullViewCount;
};

struct ComponentSpec {
  DegradationKind kind;
  SeverityLevel level;
};

struct ComponentRecord {
  DegradationKind kind;
  SeverityLevel level;
  std::vector<std::pair<std::string, double>> params;
};

struct MixtureRecord {
  std::vector<ComponentRecord> components;  // application order
  std::optional<MixtureKind> mixture;
  SeverityLevel severity;                   // max of component levels
  std::optional<BoundingBox> metal_bbox;
  std::uint64_t seed = 0;
  std::uint64_t structure_seed = 0;
  std::size_t noise_clamped_cells = 0;

  [[nodiscard]] std::vector<DegradationKind> order() const;
};

/// Random streams of one sample. `seed` drives stochastic noise; the
/// structure seed fixes streak masks and metal placement so that the levels
/// of one reference slice differ only in severity.
struct SampleSeeds {
  std::uint64_t seed = 0;
  std::uint64_t structure_seed = 0;
};

/// Runs the components through the shared reconstruction path:
/// metal (image domain) -> projection (sparse when aliasing) -> blur ->
/// streaks -> noise -> FBP. Component order must respect these stages.
std::pair<Image, MixtureRecord> degrade_image(const Image& ref,
                                              std::span<const ComponentSpec> components,
                                              const SampleSeeds& seeds,
                                              const PipelineContext& ctx = {});

struct MixtureConfig {
  MixtureKind kind = MixtureKind::blur_noise;
  SeverityLevel global_level;
  std::vector<SeverityLevel> component_levels;  // empty: sampled from global_level
  SampleSeeds seeds;
};

std::pair<Image, MixtureRecord> compose_mixture(const Image& ref, const MixtureConfig& cfg,
                                                const PipelineContext& ctx = {});

}  // namespace ctdb
