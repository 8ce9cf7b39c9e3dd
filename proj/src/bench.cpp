#include "ctdb/bench.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctdb/io.hpp"
#include "ctdb/parallel.hpp"
#include "ctdb/phantom.hpp"
#include "ctdb/schema.hpp"
#include "ctdb/seed.hpp"
#include "ctdb/semantic.hpp"
#include "ctdb/spectral.hpp"

namespace ctdb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
}

std::string_view adjective(SeverityLevel level) {
  static constexpr std::array<std::string_view, 4> kWords{"mild", "moderate", "strong", "severe"};
  return kWords[static_cast<std::size_t>(level.value())];
}

std::string phrase(DegradationKind kind, SeverityLevel level) {
  const std::string adj(adjective(level));
  switch (kind) {
    case DegradationKind::noise: return adj + " noise and grainy appearance";
    case DegradationKind::blur: return adj + " blur and loss of sharpness";
    case DegradationKind::streak: return adj + " streak artifacts";
    case DegradationKind::aliasing: return adj + " sparse-view aliasing artifacts";
    case DegradationKind::metal: return adj + " metal artifacts causing bright streaks";
  }
  throw std::logic_error("unknown degradation kind");
}

template <typename T>
T get_checked(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(std::string("unknown ") + where + " key '" + key + "'");
    }
  }
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<DegradationKind> Setting::kinds() const {
  if (single) return {*single};
  return mixture_components(*mixture);
}

const std::vector<Setting>& all_settings() {
  static const std::vector<Setting> settings{
      {"S1_noise", DegradationKind::noise, std::nullopt},
      {"S2_blur", DegradationKind::blur, std::nullopt},
      {"S3_streak", DegradationKind::streak, std::nullopt},
      {"S4_aliasing", DegradationKind::aliasing, std::nullopt},
      {"S5_metal", DegradationKind::metal, std::nullopt},
      {"M1_b+n", std::nullopt, MixtureKind::blur_noise},
      {"M2_s+n", std::nullopt, MixtureKind::streak_noise},
      {"M3_m+n", std::nullopt, MixtureKind::metal_noise},
      {"M4_a+n", std::nullopt, MixtureKind::aliasing_noise},
      {"M5_m+b+n", std::nullopt, MixtureKind::metal_blur_noise},
  };
  return settings;
}

const Setting& find_setting(std::string_view name) {
  const auto key = lower(name);
  for (const auto& s : all_settings()) {
    const auto id = lower(s.id);
    if (key == id || key == id.substr(0, id.find('_'))) return s;
  }
  throw std::invalid_argument("unknown setting '" + std::string(name) + "'");
}

GenerationConfig GenerationConfig::from_json(const json& j) {
  reject_unknown_keys(j,
                      {"num_reference_slices", "image_size", "settings", "levels", "master_seed",
                       "output_dir", "test_fraction", "physics", "noise", "mu_metal"},
                      "config");
  GenerationConfig cfg;
  if (j.contains("num_reference_slices")) cfg.num_reference_slices = get_checked<std::size_t>(j, "num_reference_slices");
  if (j.contains("image_size")) cfg.image_size = get_checked<std::size_t>(j, "image_size");
  if (j.contains("settings")) cfg.settings = get_checked<std::vector<std::string>>(j, "settings");
  if (j.contains("levels")) cfg.levels = get_checked<std::vector<int>>(j, "levels");
  if (j.contains("master_seed")) cfg.master_seed = get_checked<std::uint64_t>(j, "master_seed");
  if (j.contains("output_dir")) cfg.output_dir = get_checked<std::string>(j, "output_dir");
  if (j.contains("test_fraction")) cfg.test_fraction = get_checked<double>(j, "test_fraction");
  if (j.contains("mu_metal")) cfg.pipeline.mu_metal = get_checked<double>(j, "mu_metal");
  if (j.contains("physics")) {
    const auto& p = j.at("physics");
    reject_unknown_keys(p, {"mu_water"}, "physics");
    if (p.contains("mu_water")) cfg.pipeline.physics.mu_water = get_checked<double>(p, "mu_water");
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown_keys(n, {"I0", "alpha", "sigma_e", "delta"}, "noise");
    auto& np = cfg.pipeline.noise;
    if (n.contains("I0")) np.incident_intensity = get_checked<double>(n, "I0");
    if (n.contains("alpha")) np.dose_scale = get_checked<double>(n, "alpha");
    if (n.contains("sigma_e")) np.electronic_sigma = get_checked<double>(n, "sigma_e");
    if (n.contains("delta")) np.log_floor = get_checked<double>(n, "delta");
  }
  return cfg;
}

json GenerationConfig::to_json() const {
  // output_dir is left out so identical runs into different trees match.
  const auto& np = pipeline.noise;
  return json{{"num_reference_slices", num_reference_slices},
              {"image_size", image_size},
              {"settings", settings},
              {"levels", levels},
              {"master_seed", master_seed},
              {"test_fraction", test_fraction},
              {"physics", {{"mu_water", pipeline.physics.mu_water}}},
              {"noise", {{"I0", np.incident_intensity}, {"alpha", np.dose_scale}, {"sigma_e", np.electronic_sigma}, {"delta", np.log_floor}}},
              {"mu_metal", pipeline.mu_metal}};
}

void GenerationConfig::validate() {
  if (num_reference_slices == 0) throw std::invalid_argument("num_reference_slices must be positive");
  if (image_size < 64) throw std::invalid_argument("image_size must be at least 64");
  if (levels.empty()) throw std::invalid_argument("at least one level is required");
  std::set<int> seen_levels;
  for (int l : levels) {
    static_cast<void>(SeverityLevel(l));
    if (!seen_levels.insert(l).second) throw std::invalid_argument("duplicate level");
  }
  if (settings.empty()) {
    for (const auto& s : all_settings()) settings.push_back(s.id);
  }
  std::set<std::string> seen;
  for (auto& s : settings) {
    s = find_setting(s).id;
    if (!seen.insert(s).second) throw std::invalid_argument("duplicate setting " + s);
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw std::invalid_argument("test_fraction must be in [0, 1]");
  if (!(pipeline.physics.mu_water > 0.0)) throw std::invalid_argument("mu_water must be positive");
  if (!(pipeline.mu_metal > 0.0)) throw std::invalid_argument("mu_metal must be positive");
  pipeline.noise.validate();
  if (output_dir.empty()) throw std::invalid_argument("output_dir is required");
}

json DatasetManifest::to_json() const {
  json refs = json::array();
  for (const auto& r : references) refs.push_back({{"id", r.id}, {"path", r.path}, {"split", r.split}});
  json samples_json = json::array();
  for (const auto& s : samples) {
    samples_json.push_back({{"sample_id", s.sample_id},
                            {"setting", s.setting},
                            {"severity", s.severity},
                            {"reference_id", s.reference_id},
                            {"split", s.split},
                            {"reference_path", s.reference_path},
                            {"degraded_path", s.degraded_path},
                            {"metadata_path", s.metadata_path}});
  }
  return json{{"generator_version", kGeneratorVersion},
              {"complete", complete},
              {"config", config},
              {"references", refs},
              {"samples", samples_json},
              {"errors", errors}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  try {
    DatasetManifest m;
    m.complete = j.at("complete").get<bool>();
    m.config = j.at("config");
    for (const auto& r : j.at("references")) {
      m.references.push_back({r.at("id"), r.at("path"), r.at("split")});
    }
    for (const auto& s : j.at("samples")) {
      m.samples.push_back({s.at("sample_id"), s.at("setting"), s.at("severity").get<int>(), s.at("reference_id"),
                           s.at("split"), s.at("reference_path"), s.at("degraded_path"), s.at("metadata_path")});
    }
    m.errors = j.value("errors", std::vector<std::string>{});
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
  }
}

std::string reference_id(std::size_t slice) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ref_%04zu", slice);
  return buf;
}

std::string sample_id(std::string_view ref_id, const Setting& setting, int level) {
  return std::string(ref_id) + "_" + setting.id + "_L" + std::to_string(level);
}

std::vector<std::string> split_assignment(std::size_t num_slices, double test_fraction, std::uint64_t master_seed) {
  std::vector<std::size_t> order(num_slices);
  std::iota(order.begin(), order.end(), 0);
  const std::uint64_t seed = derive_seed(master_seed, "split");
  for (std::size_t i = num_slices; i > 1; --i) {
    const std::size_t j = combine_seed({seed, i}) % i;
    std::swap(order[i - 1], order[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(num_slices)));
  std::vector<std::string> split(num_slices, "train");
  for (std::size_t k = 0; k < n_test; ++k) split[order[k]] = "test";
  return split;
}

SampleSeeds sample_seeds(std::uint64_t master_seed, std::size_t slice, std::string_view setting, int level) {
  const auto s = static_cast<std::uint64_t>(slice);
  const auto l = static_cast<std::uint64_t>(level);
  return {combine_seed({master_seed, s, fnv1a(setting), l}), combine_seed({master_seed, s, fnv1a(setting)})};
}

std::uint64_t phantom_seed(std::uint64_t master_seed, std::size_t slice) {
  return combine_seed({master_seed, fnv1a("phantom"), static_cast<std::uint64_t>(slice)});
}

std::string describe(const MixtureRecord& record) {
  std::vector<std::string> parts;
  for (const auto& c : record.components) parts.push_back(phrase(c.kind, c.level));
  if (parts.empty()) throw std::invalid_argument("record has no components");
  std::string text = "Abdominal CT slice with ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) text += parts.size() == 2 ? " and " : (i + 1 == parts.size() ? ", and " : ", ");
    text += parts[i];
  }
  return text + ".";
}

json metadata_json(const SampleEntry& entry, const MixtureRecord& record, const Geometry& geometry,
                   const PhysicsConstants& physics, const std::string& descriptor_hex) {
  json components = json::array();
  for (const auto& c : record.components) {
    json params = json::object();
    for (const auto& [name, value] : c.params) params[name] = value;
    components.push_back({{"kind", to_string(c.kind)}, {"level", c.level.value()}, {"params", params}});
  }
  json order = json::array();
  for (auto k : record.order()) order.push_back(to_string(k));
  json bbox = nullptr;
  if (record.metal_bbox) {
    const auto& b = *record.metal_bbox;
    bbox = {{"row_min", b.row_min}, {"col_min", b.col_min}, {"row_max", b.row_max}, {"col_max", b.col_max}};
  }
  return json{{"sample_id", entry.sample_id},
              {"setting", entry.setting},
              {"reference_id", entry.reference_id},
              {"split", entry.split},
              {"reference_path", entry.reference_path},
              {"degraded_path", entry.degraded_path},
              {"components", components},
              {"order", order},
              {"mixture_kind", record.mixture ? json(to_string(*record.mixture)) : json(nullptr)},
              {"severity", record.severity.value()},
              {"metal_bbox", bbox},
              {"seed", record.seed},
              {"structure_seed", record.structure_seed},
              {"generator_version", kGeneratorVersion},
              {"prompt", describe(record)},
              {"spectral_descriptor", descriptor_hex},
              {"physics", {{"mu_water", physics.mu_water}}},
              {"geometry",
               {{"image_size", geometry.image_rows},
                {"pixel_spacing_mm", geometry.pixel_spacing_mm},
                {"num_views", geometry.num_views()},
                {"num_detectors", geometry.num_detectors},
                {"detector_spacing_mm", geometry.detector_spacing_mm}}},
              {"noise_clamped_cells", record.noise_clamped_cells}};
}

std::vector<std::string> validate_metadata(const json& meta) {
  auto errors = validate_json(meta, metadata_schema());
  if (!errors.empty()) return errors;

  int max_level = -1;
  std::vector<std::string> kinds;
  for (const auto& c : meta.at("components")) {
    max_level = std::max(max_level, c.at("level").get<int>());
    kinds.push_back(c.at("kind").get<std::string>());
  }
  if (meta.at("severity").get<int>() != max_level) errors.push_back("/severity: not the max of the component levels");
  if (meta.at("order").get<std::vector<std::string>>() != kinds) {
    errors.push_back("/order: does not list the component kinds in order");
  }
  std::vector<std::string> expected;
  const auto& setting = find_setting(meta.at("setting").get<std::string>());
  for (auto k : setting.kinds()) expected.emplace_back(to_string(k));
  if (kinds != expected) errors.push_back("/components: kinds do not match the setting");
  const auto& mk = meta.at("mixture_kind");
  if (setting.mixture ? (mk.is_null() || mk.get<std::string>() != to_string(*setting.mixture)) : !mk.is_null()) {
    errors.push_back("/mixture_kind: inconsistent with the setting");
  }
  const bool has_metal = std::find(kinds.begin(), kinds.end(), "metal") != kinds.end();
  const auto& bbox = meta.at("metal_bbox");
  if (has_metal != !bbox.is_null()) errors.push_back("/metal_bbox: must be present exactly when metal is applied");
  if (!bbox.is_null() && (bbox.at("row_min").get<std::size_t>() > bbox.at("row_max").get<std::size_t>() ||
                          bbox.at("col_min").get<std::size_t>() > bbox.at("col_max").get<std::size_t>())) {
    errors.push_back("/metal_bbox: min exceeds max");
  }
  return errors;
}

DatasetManifest generate(GenerationConfig cfg) {
  cfg.validate();
  const fs::path root = cfg.output_dir;
  fs::create_directories(root);
  fs::remove(root / "manifest.json");
  write_text(root / kInProgressMarker, "generation in progress\n");
  fs::create_directories(root / "refs");
  fs::create_directories(root / "meta");

  std::vector<const Setting*> settings;
  for (const auto& s : cfg.settings) settings.push_back(&find_setting(s));
  for (const auto* s : settings) {
    for (int l : cfg.levels) fs::create_directories(root / "degraded" / s->id / ("L" + std::to_string(l)));
  }

  DatasetManifest manifest;
  manifest.config = cfg.to_json();
  const auto split = split_assignment(cfg.num_reference_slices, cfg.test_fraction, cfg.master_seed);

  for (std::size_t slice = 0; slice < cfg.num_reference_slices; ++slice) {
    const auto ref_id = reference_id(slice);
    const std::string ref_path = "refs/" + ref_id + ".ctdi";
    manifest.references.push_back({ref_id, ref_path, split[slice]});
    Image ref;
    try {
      ref = make_phantom(cfg.image_size, phantom_seed(cfg.master_seed, slice));
      write_image(root / ref_path, ref);
    } catch (const std::exception& e) {
      manifest.errors.push_back(ref_id + ": " + e.what());
      continue;
    }
    const Geometry geometry = standard_geometry(ref.height(), ref.width(), ref.pixel_spacing_mm);

    std::vector<SampleEntry> entries;
    for (const auto* s : settings) {
      for (int level : cfg.levels) {
        const auto id = sample_id(ref_id, *s, level);
        entries.push_back({id, s->id, level, ref_id, split[slice], ref_path,
                           "degraded/" + s->id + "/L" + std::to_string(level) + "/" + ref_id + ".ctdi",
                           "meta/" + id + ".json"});
      }
    }
    std::vector<std::string> task_errors(entries.size());
    parallel_for(entries.size(), [&](std::size_t i) {
      const auto& entry = entries[i];
      try {
        const auto& setting = find_setting(entry.setting);
        const SeverityLevel level(entry.severity);
        const auto seeds = sample_seeds(cfg.master_seed, slice, setting.id, entry.severity);
        std::pair<Image, MixtureRecord> out;
        if (setting.single) {
          const ComponentSpec spec{*setting.single, level};
          out = degrade_image(ref, std::span(&spec, 1), seeds, cfg.pipeline);
        } else {
          out = compose_mixture(ref, MixtureConfig{*setting.mixture, level, {}, seeds}, cfg.pipeline);
        }
        const auto meta = metadata_json(entry, out.second, geometry, cfg.pipeline.physics,
                                        spectral_descriptor(out.first).to_hex());
        write_image(root / entry.degraded_path, out.first);
        write_json(root / entry.metadata_path, meta);
      } catch (const std::exception& e) {
        task_errors[i] = entry.sample_id + ": " + e.what();
      }
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (task_errors[i].empty()) {
        manifest.samples.push_back(std::move(entries[i]));
      } else {
        manifest.errors.push_back(std::move(task_errors[i]));
      }
    }
  }

  manifest.complete = manifest.errors.empty();
  write_json(root / "manifest.json", manifest.to_json());
  fs::remove(root / kInProgressMarker);
  return manifest;
}

DatasetManifest read_manifest(const fs::path& path) { return DatasetManifest::from_json(read_json(path)); }

ReportOutcome run_report(const fs::path& manifest_path, const ReportOptions& opts) {
  const auto manifest = read_manifest(manifest_path);
  if (!manifest.complete) throw std::invalid_argument("manifest is incomplete; rerun generation");
  static const std::set<std::string, std::less<>> kMetrics{"psnr", "ssim", "vif"};
  if (opts.metrics.empty()) throw std::invalid_argument("no metrics selected");
  for (const auto& m : opts.metrics) {
    if (!kMetrics.contains(m)) throw std::invalid_argument("unknown metric '" + m + "'");
  }
  if (opts.split && *opts.split != "train" && *opts.split != "test") {
    throw std::invalid_argument("split must be train or test");
  }
  std::optional<EmbeddingSet> embeddings;
  if (opts.embeddings) embeddings = read_embeddings(*opts.embeddings);

  const fs::path root = manifest_path.parent_path();
  std::vector<const SampleEntry*> samples;
  for (const auto& s : manifest.samples) {
    if (!opts.split || s.split == *opts.split) samples.push_back(&s);
  }

  struct Result {
    std::vector<double> values;
    double data_range = 0.0;
    std::string missing;
    std::string failure;
  };
  std::vector<Result> results(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = *samples[i];
    auto& r = results[i];
    Image ref;
    Image deg;
    try {
      ref = read_image(root / s.reference_path);
    } catch (const std::exception&) {
      r.missing = s.reference_path;
      return;
    }
    try {
      deg = read_image(root / s.degraded_path);
    } catch (const std::exception&) {
      r.missing = s.degraded_path;
      return;
    }
    try {
      const auto window = reference_window(ref, reconstruction_mask(ref.height(), ref.width()));
      r.data_range = window.hi - window.lo;
      for (const auto& m : opts.metrics) {
        if (m == "psnr") r.values.push_back(psnr(ref, deg));
        if (m == "ssim") r.values.push_back(ssim(ref, deg));
        if (m == "vif") r.values.push_back(vif(ref, deg));
      }
    } catch (const std::exception& e) {
      r.values.clear();
      r.failure = s.sample_id + ": " + e.what();
    }
  });

  ReportOutcome outcome;
  std::vector<std::vector<MetricSample>> per_metric(opts.metrics.size());
  std::vector<std::string> failures;
  std::ostringstream table;
  table << "sample_id,setting,severity,split,data_range";
  for (const auto& m : opts.metrics) table << ',' << m;
  table << '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = *samples[i];
    const auto& r = results[i];
    if (!r.missing.empty()) {
      outcome.missing.push_back(r.missing);
      continue;
    }
    if (!r.failure.empty()) {
      failures.push_back(r.failure);
      continue;
    }
    table << s.sample_id << ',' << s.setting << ',' << s.severity << ',' << s.split << ','
          << format_value(r.data_range);
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      table << ',' << format_value(r.values[k]);
      per_metric[k].push_back({s.setting, s.severity, r.values[k]});
    }
    table << '\n';
  }
  std::sort(outcome.missing.begin(), outcome.missing.end());
  outcome.missing.erase(std::unique(outcome.missing.begin(), outcome.missing.end()), outcome.missing.end());

  for (std::size_t k = 0; k < opts.metrics.size(); ++k) {
    outcome.metrics.append(severity_correlation_report(opts.metrics[k], per_metric[k]));
  }
  outcome.metrics.diagnostics.insert(outcome.metrics.diagnostics.begin(), failures.begin(), failures.end());

  fs::create_directories(opts.out_dir);
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(opts.out_dir / name, text);
    outcome.written.push_back(opts.out_dir / name);
  };
  emit("metrics.csv", table.str());
  emit("correlation.csv", correlation_csv(outcome.metrics));
  emit("correlation.md", correlation_markdown(outcome.metrics, "Severity correlation (rho / r)"));
  emit("level_stats.csv", level_stats_csv(outcome.metrics));
  emit("level_stats.md", level_stats_markdown(outcome.metrics, "Metric mean +- std per severity level"));

  if (embeddings) {
    std::vector<DriftPair> pairs;
    for (const auto* s : samples) {
      pairs.push_back({s->setting, s->severity, "img:" + s->reference_id, "img:" + s->sample_id});
    }
    outcome.drift = drift_severity_report(*embeddings, pairs);
    emit("drift_correlation.csv", correlation_csv(*outcome.drift));
    emit("drift_correlation.md", correlation_markdown(*outcome.drift, "Embedding drift (1 - cosine similarity) correlation (rho / r)"));
    emit("drift_level_stats.csv", level_stats_csv(*outcome.drift));
    emit("drift_level_stats.md", level_stats_markdown(*outcome.drift, "Embedding drift (1 - cosine similarity) mean +- std per severity level"));
  }

  std::string diag;
  for (const auto& m : outcome.missing) diag += "missing file: " + m + "\n";
  for (const auto& d : outcome.metrics.diagnostics) diag += d + "\n";
  if (outcome.drift) {
    for (const auto& d : outcome.drift->diagnostics) diag += d + "\n";
  }
  emit("diagnostics.txt", diag);
  return outcome;
}

}  // namespace ctdb
