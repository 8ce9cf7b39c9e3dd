#pragma once

// Dataset generation, per-sample metadata and severity reports.
//
// Output tree of a generation run:
//   refs/<reference_id>.ctdi
//   degraded/<setting>/L<level>/<reference_id>.ctdi
//   meta/<sample_id>.json
//   manifest.json          written last; "complete" is false after failures
//
// While a run is in progress the tree holds a GENERATING marker file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctdb/degrade.hpp"
#include "ctdb/iqa.hpp"
#include "json.hpp"

namespace ctdb {

inline constexpr std::string_view kGeneratorVersion = "ctdb-1.0.0";
inline constexpr std::string_view kInProgressMarker = "GENERATING";

/// A benchmark setting: a single degradation (S1..S5) or a mixture (M1..M5).
struct Setting {
  std::string id;  // e.g. "S1_noise", "M5_m+b+n"
  std::optional<DegradationKind> single;
  std::optional<MixtureKind> mixture;

  /// Component kinds in application order.
  [[nodiscard]] std::vector<DegradationKind> kinds() const;
};

/// S1_noise, S2_blur, S3_streak, S4_aliasing, S5_metal, M1_b+n, M2_s+n,
/// M3_m+n, M4_a+n, M5_m+b+n.
const std::vector<Setting>& all_settings();
/// Accepts the full id or its prefix ("S1", "m5"); throws otherwise.
const Setting& find_setting(std::string_view name);

struct GenerationConfig {
  std::size_t num_reference_slices = 1;
  std::size_t image_size = 512;
  std::vector<std::string> settings;  // full ids; empty means all
  std::vector<int> levels{0, 1, 2, 3};
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir;
  double test_fraction = 0.3;
  PipelineContext pipeline;

  /// Throws std::invalid_argument on an unknown key or invalid value.
  static GenerationConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  /// Normalizes setting names to full ids and checks invariants.
  void validate();
};

struct SampleEntry {
  std::string sample_id;
  std::string setting;
  int severity = 0;
  std::string reference_id;
  std::string split;
  std::string reference_path;  // relative to the dataset root
  std::string degraded_path;
  std::string metadata_path;
};

struct ReferenceEntry {
  std::string id;
  std::string path;
  std::string split;
};

struct DatasetManifest {
  nlohmann::json config;
  std::vector<ReferenceEntry> references;
  std::vector<SampleEntry> samples;
  std::vector<std::string> errors;
  bool complete = false;

  [[nodiscard]] nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

std::string reference_id(std::size_t slice);
std::string sample_id(std::string_view ref_id, const Setting& setting, int level);

/// Slice-level split: round(test_fraction * n) slices, chosen by a seeded
/// shuffle, are "test".
std::vector<std::string> split_assignment(std::size_t num_slices, double test_fraction,
                                          std::uint64_t master_seed);

/// Seeds depend on (master, slice, setting, level); the structure seed omits
/// the level so the levels of one slice share streak and metal placement.
SampleSeeds sample_seeds(std::uint64_t master_seed, std::size_t slice, std::string_view setting, int level);
std::uint64_t phantom_seed(std::uint64_t master_seed, std::size_t slice);

/// Natural-language description of the applied degradations.
std::string describe(const MixtureRecord& record);

/// Sample metadata document; `descriptor_hex` is the spectral descriptor of
/// the degraded image.
nlohmann::json metadata_json(const SampleEntry& entry, const MixtureRecord& record,
                             const Geometry& geometry, const PhysicsConstants& physics,
                             const std::string& descriptor_hex);

/// Schema errors plus consistency rules: severity is the max of the component
/// levels, order lists the component kinds, and mixture_kind matches them.
std::vector<std::string> validate_metadata(const nlohmann::json& meta);

/// Generates the dataset. Per-sample failures are collected and leave the
/// manifest incomplete; I/O failures on the manifest itself throw.
DatasetManifest generate(GenerationConfig cfg);

DatasetManifest read_manifest(const std::filesystem::path& path);

struct ReportOptions {
  std::vector<std::string> metrics{"psnr", "ssim", "vif"};
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::string> split;  // restrict to "train" or "test"
  std::filesystem::path out_dir;
};

struct ReportOutcome {
  CorrelationReport metrics;
  std::optional<CorrelationReport> drift;
  std::vector<std::string> missing;  // files that could not be read
  std::vector<std::filesystem::path> written;

  [[nodiscard]] bool partial() const { return !missing.empty(); }
};

/// Per-sample metrics inside the reconstruction circle, per-setting severity
/// correlations and level statistics as CSV and Markdown, and the drift report
/// when embeddings are given. Throws std::invalid_argument for an incomplete
/// manifest or an unknown metric.
ReportOutcome run_report(const std::filesystem::path& manifest_path, const ReportOptions& opts);

}  // namespace ctdb
