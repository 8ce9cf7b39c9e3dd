// ctdb: generate degraded CT datasets and severity reports.
//
// Exit codes: 0 success, 1 configuration error, 2 partial failure.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctdb/bench.hpp"
#include "ctdb/io.hpp"
#include "ctdb/phantom.hpp"
#include "json.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartial = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_generate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
  ctdb::GenerationConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config " + config_path);
    cfg = ctdb::GenerationConfig::from_json(nlohmann::json::parse(in));
    if (seed) cfg.master_seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto manifest = ctdb::generate(cfg);
  std::cout << "wrote " << manifest.samples.size() << " samples from " << manifest.references.size()
            << " reference slices to " << cfg.output_dir.string() << '\n';
  for (const auto& e : manifest.errors) std::cerr << "failed: " << e << '\n';
  return manifest.complete ? kOk : kPartial;
}

int run_report(const std::string& manifest, const std::string& metrics, const std::string& embeddings,
               const std::string& split, const std::string& out) {
  ctdb::ReportOptions opts;
  opts.metrics = split_list(metrics);
  if (!embeddings.empty()) opts.embeddings = embeddings;
  if (!split.empty()) opts.split = split;
  opts.out_dir = out;
  ctdb::ReportOutcome outcome;
  try {
    outcome = ctdb::run_report(manifest, opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  for (const auto& p : outcome.written) std::cout << "wrote " << p.string() << '\n';
  for (const auto& m : outcome.missing) std::cerr << "missing: " << m << '\n';
  return outcome.partial() ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CT degradation benchmark toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a degraded dataset from synthetic phantoms");
  gen->add_option("--config", config_path, "Generation config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Master seed (overrides the config)");
  gen->add_option("--out", gen_out, "Output directory (overrides the config)");

  std::string manifest;
  std::string metrics = "psnr,ssim,vif";
  std::string embeddings;
  std::string split;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "Severity correlation report for a generated dataset");
  rep->add_option("--manifest", manifest, "Dataset manifest.json")->required();
  rep->add_option("--metrics", metrics, "Comma-separated subset of psnr,ssim,vif");
  rep->add_option("--embeddings", embeddings, "CTDE embedding file for the drift report");
  rep->add_option("--split", split, "Restrict to the train or test split");
  rep->add_option("--out", report_out, "Report directory")->required();

  std::size_t size = 512;
  std::uint64_t phantom_seed = 0;
  std::string phantom_out;
  auto* ph = app.add_subcommand("phantom", "Write one synthetic abdominal phantom as CTDI");
  ph->add_option("--size", size, "Image size in pixels (>= 64)");
  ph->add_option("--seed", phantom_seed, "Phantom seed");
  ph->add_option("--out", phantom_out, "Output .ctdi path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return run_generate(config_path, seed, gen_out);
    if (*rep) return run_report(manifest, metrics, embeddings, split, report_out);
    if (*ph) {
      try {
        ctdb::write_image(phantom_out, ctdb::make_phantom(size, phantom_seed));
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
      }
      std::cout << "wrote " << phantom_out << '\n';
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kConfigError;
}
