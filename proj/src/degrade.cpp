#include "ctdb/degrade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "ctdb/seed.hpp"

namespace ctdb {

namespace {

// Canonical stage of each operator in the shared pipeline.
int stage_of(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::metal: return 0;
    case DegradationKind::aliasing: return 1;
    case DegradationKind::blur: return 2;
    case DegradationKind::streak: return 3;
    case DegradationKind::noise: return 4;
  }
  return -1;
}

void require_same_shape(const Mask& mask, std::size_t rows, std::size_t cols, const char* what) {
  if (mask.rows() != rows || mask.cols() != cols) {
    throw std::invalid_argument(std::string(what) + " mask shape mismatch");
  }
}

}  // namespace

std::string_view to_string(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::noise: return "noise";
    case DegradationKind::blur: return "blur";
    case DegradationKind::streak: return "streak";
    case DegradationKind::aliasing: return "aliasing";
    case DegradationKind::metal: return "metal";
  }
  return "unknown";
}

DegradationKind parse_kind(std::string_view name) {
  for (auto k : {DegradationKind::noise, DegradationKind::blur, DegradationKind::streak,
                 DegradationKind::aliasing, DegradationKind::metal}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown degradation kind: " + std::string(name));
}

SeverityLevel::SeverityLevel(int level) : level_(level) {
  if (level < kMin || level > kMax) {
    throw std::invalid_argument("severity level out of range: " + std::to_string(level));
  }
}

void NoiseParams::validate() const {
  if (!(incident_intensity > 0.0)) throw std::invalid_argument("I0 must be positive");
  if (!(dose_scale > 0.0)) throw std::invalid_argument("dose scale must be positive");
  if (!(electronic_sigma >= 0.0)) throw std::invalid_argument("electronic sigma must be >= 0");
  if (!(log_floor > 0.0)) throw std::invalid_argument("log floor must be positive");
  if (!(residual_scale >= 1.0)) throw std::invalid_argument("residual scale must be >= 1");
}

Sinogram apply_noise(const Sinogram& s, const NoiseParams& p, std::uint64_t seed,
                     NoiseDiagnostics* diagnostics) {
  s.validate();
  p.validate();
  const double flux = p.dose_scale * p.incident_intensity;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> electronic(0.0, p.electronic_sigma);
  std::size_t clamped = 0;

  Sinogram out = s;
  for (double& cell : out.values.values()) {
    const double clean = cell;
    if (clean < 0.0) ++clamped;
    const double expected = flux * std::exp(-std::max(clean, 0.0));
    const auto counts = std::poisson_distribution<long long>(expected)(rng);
    const double detected = static_cast<double>(counts) +
                            (p.electronic_sigma > 0.0 ? electronic(rng) : 0.0);
    const double noisy = -std::log((std::max(detected, 0.0) + p.log_floor) / flux);
    cell = clean + p.residual_scale * (noisy - clean);
  }
  if (diagnostics) diagnostics->clamped_cells = clamped;
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("blur sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    const double w = std::exp(-0.5 * x * x / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

Sinogram apply_blur(const Sinogram& s, double sigma_bins) {
  s.validate();
  const auto kernel = gaussian_kernel(sigma_bins);
  const long radius = static_cast<long>(kernel.size() / 2);
  const long n = static_cast<long>(s.geometry.num_detectors);
  auto reflect = [n](long i) {
    // half-sample symmetric: ... b a | a b ... ; repeated for wide kernels
    for (;;) {
      if (i < 0) {
        i = -i - 1;
      } else if (i >= n) {
        i = 2 * n - i - 1;
      } else {
        return i;
      }
    }
  };
  Sinogram out = s;
  for (std::size_t v = 0; v < s.values.rows(); ++v) {
    auto src = s.values.row(v);
    auto dst = out.values.row(v);
    for (long k = 0; k < n; ++k) {
      double acc = 0.0;
      for (long j = -radius; j <= radius; ++j) {
        acc += kernel[static_cast<std::size_t>(j + radius)] * src[static_cast<std::size_t>(reflect(k - j))];
      }
      dst[static_cast<std::size_t>(k)] = acc;
    }
  }
  return out;
}

Mask make_streak_mask(const Geometry& g, std::uint64_t seed) {
  g.validate();
  const std::size_t nd = g.num_detectors;
  const double det_mid = (static_cast<double>(nd) - 1.0) / 2.0;
  const double circle_bins = static_cast<double>(std::min(g.image_rows, g.image_cols)) / 2.0 *
                             g.pixel_spacing_mm / g.detector_spacing_mm;
  const double half_span = 0.9 * circle_bins;
  auto lo = static_cast<long>(std::ceil(det_mid - half_span));
  auto hi = static_cast<long>(std::floor(det_mid + half_span)) - static_cast<long>(kStreakSegmentBins - 1);
  lo = std::max(lo, 0L);
  hi = std::min(hi, static_cast<long>(nd - kStreakSegmentBins));
  if (hi < lo) throw std::invalid_argument("detector array too small for streak segments");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> view_dist(0, g.num_views() - 1);
  std::uniform_int_distribution<long> bin_dist(lo, hi);
  Mask mask(g.num_views(), nd, 0);
  for (std::size_t i = 0; i < kStreakSegments; ++i) {
    const std::size_t v = view_dist(rng);
    const auto start = static_cast<std::size_t>(bin_dist(rng));
    for (std::size_t b = 0; b < kStreakSegmentBins; ++b) mask(v, start + b) = 1;
  }
  return mask;
}

Sinogram apply_streaks(const Sinogram& s, const StreakParams& p) {
  s.validate();
  require_same_shape(p.mask, s.values.rows(), s.values.cols(), "streak");
  if (!std::isfinite(p.delta_l)) throw std::invalid_argument("delta_L must be finite");
  Sinogram out = s;
  auto dst = out.values.values();
  auto m = p.mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (m[i] > 1) throw std::invalid_argument("streak mask must be binary");
    if (m[i]) dst[i] += p.delta_l;
  }
  return out;
}

Sinogram apply_aliasing(const AttenuationMap& m, const Geometry& g, std::size_t n_views) {
  return radon(m, g.subset(n_views));
}

std::optional<BoundingBox> mask_bounding_box(const Mask& mask) {
  std::optional<BoundingBox> box;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      if (!box) {
        box = BoundingBox{r, c, r, c};
      } else {
        box->row_min = std::min(box->row_min, r);
        box->col_min = std::min(box->col_min, c);
        box->row_max = std::max(box->row_max, r);
        box->col_max = std::max(box->col_max, c);
      }
    }
  }
  return box;
}

MetalInsertion insert_metal(const AttenuationMap& m, const MetalParams& p) {
  m.validate();
  require_same_shape(p.mask, m.height(), m.width(), "metal");
  if (!std::isfinite(p.mu_metal) || p.mu_metal < 0.0) throw std::invalid_argument("mu_metal must be finite and >= 0");
  MetalInsertion out{m, mask_bounding_box(p.mask)};
  auto dst = out.map.mu.values();
  auto mask = p.mask.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (mask[i] > 1) throw std::invalid_argument("metal mask must be binary");
    if (mask[i]) dst[i] = p.mu_metal;
  }
  return out;
}

Mask disk_mask(std::size_t rows, std::size_t cols, double center_row, double center_col,
               double radius) {
  Mask m(rows, cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double dr = static_cast<double>(r) - center_row;
      const double dc = static_cast<double>(c) - center_col;
      if (dr * dr + dc * dc <= radius * radius) m(r, c) = 1;
    }
  }
  return m;
}

Mask make_metal_mask(const Image& ref, double radius_px, std::uint64_t seed) {
  ref.validate();
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < ref.hu.size(); ++i) {
    if (ref.hu.data()[i] > -500.0) support.push_back(i);
  }
  if (support.empty()) throw std::invalid_argument("image has no body support for metal insertion");
  std::mt19937_64 rng(seed);
  const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, support.size() - 1)(rng);
  const std::size_t idx = support[pick];
  return disk_mask(ref.height(), ref.width(), static_cast<double>(idx / ref.width()),
                   static_cast<double>(idx % ref.width()), radius_px);
}

SeverityParam severity_params(DegradationKind kind, SeverityLevel level) {
  static constexpr std::array<double, 4> kGamma{1.0, 2.0, 2.5, 4.0};
  static constexpr std::array<double, 4> kSigma{0.8, 1.0, 1.5, 2.5};
  static constexpr std::array<double, 4> kDeltaL{0.25, 0.5, 1.0, 2.0};
  static constexpr std::array<double, 4> kViews{180.0, 90.0, 60.0, 45.0};
  static constexpr std::array<double, 4> kMetalRadius{4.0, 8.0, 12.0, 16.0};
  const auto i = static_cast<std::size_t>(level.value());
  switch (kind) {
    case DegradationKind::noise: return {kind, "gamma", kGamma[i]};
    case DegradationKind::blur: return {kind, "sigma", kSigma[i]};
    case DegradationKind::streak: return {kind, "delta_L", kDeltaL[i]};
    case DegradationKind::aliasing: return {kind, "n_views", kViews[i]};
    case DegradationKind::metal: return {kind, "radius_px", kMetalRadius[i]};
  }
  throw std::invalid_argument("unknown degradation kind");
}

std::string_view to_string(MixtureKind kind) {
  switch (kind) {
    case MixtureKind::blur_noise: return "b+n";
    case MixtureKind::streak_noise: return "s+n";
    case MixtureKind::metal_noise: return "m+n";
    case MixtureKind::aliasing_noise: return "a+n";
    case MixtureKind::metal_blur_noise: return "m+b+n";
  }
  return "unknown";
}

MixtureKind parse_mixture(std::string_view name) {
  for (auto k : {MixtureKind::blur_noise, MixtureKind::streak_noise, MixtureKind::metal_noise,
                 MixtureKind::aliasing_noise, MixtureKind::metal_blur_noise}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown mixture kind: " + std::string(name));
}

std::vector<DegradationKind> mixture_components(MixtureKind kind) {
  using K = DegradationKind;
  switch (kind) {
    case MixtureKind::blur_noise: return {K::blur, K::noise};
    case MixtureKind::streak_noise: return {K::streak, K::noise};
    case MixtureKind::metal_noise: return {K::metal, K::noise};
    case MixtureKind::aliasing_noise: return {K::aliasing, K::noise};
    case MixtureKind::metal_blur_noise: return {K::metal, K::blur, K::noise};
  }
  throw std::invalid_argument("unknown mixture kind");
}

std::vector<SeverityLevel> sample_component_levels(SeverityLevel global, std::size_t k,
                                                   std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("need at least one component");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution lower(0.5);
  const int g = global.value();
  std::vector<SeverityLevel> levels;
  levels.reserve(k);
  bool hit = false;
  for (std::size_t i = 0; i < k; ++i) {
    const int level = std::max(SeverityLevel::kMin, lower(rng) ? g - 1 : g);
    hit = hit || level == g;
    levels.emplace_back(level);
  }
  if (!hit) levels[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = global;
  return levels;
}

std::vector<DegradationKind> MixtureRecord::order() const {
  std::vector<DegradationKind> kinds;
  for (const auto& c : components) kinds.push_back(c.kind);
  return kinds;
}

std::pair<Image, MixtureRecord> degrade_image(const Image& ref,
                                              std::span<const ComponentSpec> components,
                                              const SampleSeeds& seeds,
                                              const PipelineContext& ctx) {
  ref.validate();
  if (components.empty()) throw std::invalid_argument("no degradation components given");
  for (std::size_t i = 0; i < components.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (components[j].kind == components[i].kind) {
        throw std::invalid_argument("duplicate degradation component");
      }
    }
    if (i > 0 && stage_of(components[i].kind) < stage_of(components[i - 1].kind)) {
      throw std::invalid_argument("component order conflicts with the acquisition pipeline");
    }
  }

  MixtureRecord record;
  record.seed = seeds.seed;
  record.structure_seed = seeds.structure_seed;
  record.severity = std::max_element(components.begin(), components.end(),
                                     [](const auto& a, const auto& b) { return a.level < b.level; })
                        ->level;

  auto find = [&](DegradationKind kind) -> const ComponentSpec* {
    for (const auto& c : components) {
      if (c.kind == kind) return &c;
    }
    return nullptr;
  };

  // Per-component parameters in application order.
  std::vector<ComponentRecord> params(components.size());
  auto record_of = [&](DegradationKind kind) -> ComponentRecord& {
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (components[i].kind == kind) return params[i];
    }
    throw std::logic_error("component not present");
  };
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto sp = severity_params(components[i].kind, components[i].level);
    params[i] = {components[i].kind, components[i].level, {{std::string(sp.name), sp.value}}};
  }

  AttenuationMap mu = hu_to_attenuation(ref, ctx.physics);
  Geometry geometry = standard_geometry(ref.height(), ref.width(), ref.pixel_spacing_mm, ctx.full_views);

  if (const auto* c = find(DegradationKind::metal)) {
    const double radius = severity_params(c->kind, c->level).value;
    MetalParams metal{make_metal_mask(ref, radius, derive_seed(seeds.structure_seed, "metal")),
                      ctx.mu_metal};
    auto inserted = insert_metal(mu, metal);
    if (!inserted.bbox) throw std::invalid_argument("metal mask selects no pixels");
    mu = std::move(inserted.map);
    record.metal_bbox = inserted.bbox;
    record_of(c->kind).params.emplace_back("mu_metal", ctx.mu_metal);
  }

  Sinogram sino;
  if (const auto* c = find(DegradationKind::aliasing)) {
    const auto views = static_cast<std::size_t>(severity_params(c->kind, c->level).value);
    sino = apply_aliasing(mu, geometry, views);
  } else {
    sino = radon(mu, geometry);
  }

  if (const auto* c = find(DegradationKind::blur)) {
    sino = apply_blur(sino, severity_params(c->kind, c->level).value);
  }

  if (const auto* c = find(DegradationKind::streak)) {
    StreakParams streak{severity_params(c->kind, c->level).value,
                        make_streak_mask(sino.geometry, derive_seed(seeds.structure_seed, "streak"))};
    std::size_t marked = 0;
    for (auto v : streak.mask.values()) marked += v;
    sino = apply_streaks(sino, streak);
    auto& rec = record_of(c->kind);
    rec.params.emplace_back("segments", static_cast<double>(kStreakSegments));
    rec.params.emplace_back("segment_bins", static_cast<double>(kStreakSegmentBins));
    rec.params.emplace_back("marked_cells", static_cast<double>(marked));
  }

  if (const auto* c = find(DegradationKind::noise)) {
    NoiseParams noise = ctx.noise;
    noise.residual_scale = severity_params(c->kind, c->level).value;
    NoiseDiagnostics diag;
    sino = apply_noise(sino, noise, derive_seed(seeds.seed, "noise"), &diag);
    record.noise_clamped_cells = diag.clamped_cells;
    auto& rec = record_of(c->kind);
    rec.params.emplace_back("I0", noise.incident_intensity);
    rec.params.emplace_back("alpha", noise.dose_scale);
    rec.params.emplace_back("sigma_e", noise.electronic_sigma);
    rec.params.emplace_back("delta", noise.log_floor);
  }

  record.components = std::move(params);
  return {attenuation_to_hu(fbp(sino), ctx.physics), std::move(record)};
}

std::pair<Image, MixtureRecord> compose_mixture(const Image& ref, const MixtureConfig& cfg,
                                                const PipelineContext& ctx) {
  const auto kinds = mixture_components(cfg.kind);
  std::vector<SeverityLevel> levels = cfg.component_levels;
  if (levels.empty()) {
    levels = sample_component_levels(cfg.global_level, kinds.size(),
                                     derive_seed(cfg.seeds.seed, "component-levels"));
  } else if (levels.size() != kinds.size()) {
    throw std::invalid_argument("component level count does not match mixture kind");
  }
  std::vector<ComponentSpec> specs;
  for (std::size_t i = 0; i < kinds.size(); ++i) specs.push_back({kinds[i], levels[i]});
  auto result = degrade_image(ref, specs, cfg.seeds, ctx);
  result.second.mixture = cfg.kind;
  return result;
}

}  // namespace ctdb
