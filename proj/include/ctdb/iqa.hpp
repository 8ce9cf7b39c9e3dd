#pragma once

// Full-reference image quality metrics, correlation statistics and ordinal /
// classification evaluation metrics.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctdb/grid.hpp"
#include "ctdb/tomo.hpp"

namespace ctdb {

// ---------------------------------------------------------------------------
// Image metrics. All metrics are evaluated inside `mask`; the overloads
// without a mask use the reconstruction circle.

/// Intensity window mapped to [0, 1] before SSIM/VIF.
struct IntensityWindow {
  double lo = 0.0;
  double hi = 1.0;
};

/// [min, max] of the reference inside the mask. A flat reference yields a
/// window of width 1 so normalization stays defined.
IntensityWindow reference_window(const Image& ref, const Mask& mask);

/// 20 log10(range / RMSE); +infinity when the masked pixels are identical.
/// The default range is the reference's masked max - min.
double psnr(const Image& ref, const Image& deg, const Mask& mask,
            std::optional<double> data_range = std::nullopt);
double psnr(const Image& ref, const Image& deg);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean local SSIM (11x11 Gaussian, sigma 1.5) over window centers inside the
/// mask whose window lies fully inside the image.
double ssim(const Image& ref, const Image& deg, const Mask& mask,
            std::optional<IntensityWindow> window = std::nullopt);
double ssim(const Image& ref, const Image& deg);

inline constexpr double kVifNoiseVariance = 2.0;

/// Pixel-domain VIF over four dyadic Gaussian scales, on images normalized by
/// the reference window and scaled to [0, 255]. Throws when the reference
/// carries no information (zero denominator).
double vif(const Image& ref, const Image& deg, const Mask& mask,
           std::optional<IntensityWindow> window = std::nullopt);
double vif(const Image& ref, const Image& deg);

// ---------------------------------------------------------------------------
// Statistics. Undefined results (zero variance) are std::nullopt.

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
};

ErrorStats mae_rmse(std::span<const double> pred, std::span<const double> truth);

/// Quadratic weighted kappa. nullopt when both label vectors are single-class.
std::optional<double> qwk(std::span<const int> pred, std::span<const int> truth,
                          int num_classes = 4);

struct ClassificationStats {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Macro F1 averages over the labels present in either vector, plus every
/// class below `num_classes` when given; classes without support score 0.
ClassificationStats accuracy_macro_f1(std::span<const int> pred, std::span<const int> truth,
                                      std::optional<int> num_classes = std::nullopt);

struct SeverityEvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> qwk;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

SeverityEvalReport evaluate_severity(std::span<const int> pred, std::span<const int> truth,
                                     int num_classes = 4);

// ---------------------------------------------------------------------------
// Severity correlation reports.

struct MetricSample {
  std::string setting;
  int severity = 0;
  double value = 0.0;
};

struct CorrelationRow {
  std::string setting;
  std::string metric;
  std::optional<double> spearman;
  std::optional<double> pearson;
  std::size_t n = 0;
};

struct LevelStat {
  std::string setting;
  std::string metric;
  int level = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  std::vector<LevelStat> level_stats;
  std::vector<std::string> diagnostics;

  void append(const CorrelationReport& other);
};

/// Sort key placing single-degradation settings (S*) before mixtures (M*).
bool setting_less(const std::string& a, const std::string& b);

/// Per-setting rho/r of `metric` against severity plus per-level mean/std.
/// Settings with fewer than 3 samples are skipped with a diagnostic.
CorrelationReport severity_correlation_report(const std::string& metric,
                                              std::span<const MetricSample> samples);

/// "setting,metric,spearman,pearson,n"; undefined values are written as NA.
std::string correlation_csv(const CorrelationReport& report);
/// "setting,metric,level,mean,std,n".
std::string level_stats_csv(const CorrelationReport& report);
/// Settings as rows, one "rho/r" column per metric.
std::string correlation_markdown(const CorrelationReport& report, const std::string& title);
/// Setting-level rows, one "mean +- std" column per metric.
std::string level_stats_markdown(const CorrelationReport& report, const std::string& title);

}  // namespace ctdb
