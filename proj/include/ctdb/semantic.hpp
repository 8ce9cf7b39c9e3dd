#pragma once

// Training-free semantic quality axis over externally computed
// vision-language embeddings, and embedding drift.
//
// Embeddings arrive in the CTDE container (little-endian):
//   "CTDE" u32 version=1, u32 count, u32 dim, then per entry
//   u16 name length, UTF-8 name, dim f32 values.
// Entry names: img:<sample_id>, patch:<sample_id>:<idx>, prompt:H:<idx>,
// prompt:L:<idx>; meta:<key>=<value> entries carry exporter notes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctdb/iqa.hpp"

namespace ctdb {

struct Embedding {
  std::string name;
  std::vector<float> values;
};

class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] const std::vector<Embedding>& entries() const noexcept { return entries_; }

  /// Throws on a dimension mismatch, a duplicate name, or non-finite values.
  void add(Embedding e);
  [[nodiscard]] const Embedding* find(std::string_view name) const;
  /// Entries whose name starts with `prefix`, in file order.
  [[nodiscard]] std::vector<const Embedding*> with_prefix(std::string_view prefix) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Embedding> entries_;
};

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

using Vector = std::vector<double>;

Vector to_vector(std::span<const float> values);

/// v / ||v||; throws for zero-norm or non-finite input.
Vector normalized(std::span<const double> v);

struct Prototypes {
  Vector high;
  Vector low;
};

/// Means of the unit-normalized high- and low-quality prompt embeddings.
Prototypes prototypes(std::span<const Vector> high, std::span<const Vector> low);

struct QualityAxis {
  Vector q;  // unit vector
  double high_norm = 0.0;
  double low_norm = 0.0;

  [[nodiscard]] std::size_t dim() const noexcept { return q.size(); }
};

inline constexpr double kDegenerateAxisNorm = 1e-9;

/// (mu_high - mu_low) / ||mu_high - mu_low||; throws when the prototypes
/// coincide within kDegenerateAxisNorm.
QualityAxis quality_axis(std::span<const double> mu_high, std::span<const double> mu_low);

/// Axis from the prompt:H:* and prompt:L:* entries of an embedding set.
QualityAxis quality_axis(const EmbeddingSet& set);

/// z is normalized first, so the score is invariant to positive scaling.
double global_score(std::span<const double> z, const QualityAxis& axis);

std::vector<double> patch_scores(std::span<const Vector> tokens, const QualityAxis& axis);

struct PooledScores {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // population
};

PooledScores pool(std::span<const double> scores);

/// [s_global, mean, max, std].
struct SemanticFeatures {
  double global = 0.0;
  std::vector<double> patch;
  PooledScores pooled;

  [[nodiscard]] std::array<double, 4> descriptor() const {
    return {global, pooled.mean, pooled.max, pooled.std};
  }
};

SemanticFeatures semantic_features(std::span<const double> z, std::span<const Vector> tokens,
                                   const QualityAxis& axis);

/// 1 - cosine similarity, in [0, 2].
double embedding_drift(std::span<const double> a, std::span<const double> b);

struct DriftPair {
  std::string setting;
  int severity = 0;
  std::string reference_name;  // e.g. img:ref_0003
  std::string degraded_name;   // e.g. img:ref_0003_S1_L2
};

/// Per-setting correlation of drift against severity (metric "drift").
/// Pairs with missing embeddings are listed in the diagnostics and skipped.
CorrelationReport drift_severity_report(const EmbeddingSet& set, std::span<const DriftPair> pairs);

inline constexpr std::array<std::string_view, 3> kHighQualityPrompts{
    "Axial abdominal CT slice with excellent diagnostic quality, sharp boundaries, clear organ "
    "detail, and no visible artifacts.",
    "Diagnostic abdominal CT with clear anatomical structures, low noise, high contrast, and no "
    "streak artifacts.",
    "High-quality CT image with sharp edges, clean appearance, and good visibility of abdominal "
    "organs.",
};

inline constexpr std::array<std::string_view, 5> kLowQualityPrompts{
    "Abdominal CT slice with severe noise and grainy appearance that reduces visibility of "
    "anatomical structures.",
    "Abdominal CT slice with strong blur and significant loss of sharpness.",
    "Abdominal CT slice with strong streak artifacts and reduced diagnostic quality.",
    "Abdominal CT slice with sparse-view aliasing artifacts and distorted anatomical structures.",
    "Abdominal CT slice with strong metal artifacts causing bright streaks and severe image "
    "corruption.",
};

}  // namespace ctdb
