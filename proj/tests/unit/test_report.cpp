#include <algorithm>

#include "ctdb/iqa.hpp"
#include "doctest.h"

using namespace ctdb;

TEST_CASE("correlation rows per setting with level statistics") {
  std::vector<MetricSample> samples;
  for (int l = 0; l < 4; ++l) {
    samples.push_back({"S2_blur", l, 0.9 - 0.1 * l});
    samples.push_back({"S2_blur", l, 0.8 - 0.1 * l});
    samples.push_back({"M1_b+n", l, 0.5});
  }
  samples.push_back({"S1_noise", 0, 1.0});
  samples.push_back({"S1_noise", 1, 0.5});
  const auto rep = severity_correlation_report("ssim", samples);

  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].setting == "S2_blur");
  CHECK(rep.rows[1].setting == "M1_b+n");
  CHECK(*rep.rows[0].pearson < -0.9);
  CHECK(rep.rows[0].n == 8);
  CHECK_FALSE(rep.rows[1].spearman.has_value());

  REQUIRE(rep.diagnostics.size() == 1);
  CHECK(rep.diagnostics[0].find("S1_noise") != std::string::npos);

  const auto it = std::find_if(rep.level_stats.begin(), rep.level_stats.end(),
                               [](const LevelStat& s) { return s.setting == "S2_blur" && s.level == 2; });
  REQUIRE(it != rep.level_stats.end());
  CHECK(it->mean == doctest::Approx(0.65));
  CHECK(it->std == doctest::Approx(0.05));
  CHECK(it->n == 2);
}

TEST_CASE("CSV output marks undefined correlations as NA") {
  std::vector<MetricSample> samples;
  for (int l = 0; l < 4; ++l) samples.push_back({"S3_streak", l, 2.0});
  const auto rep = severity_correlation_report("psnr", samples);
  const auto csv = correlation_csv(rep);
  CHECK(csv == "setting,metric,spearman,pearson,n\nS3_streak,psnr,NA,NA,4\n");
  const auto levels = level_stats_csv(rep);
  CHECK(levels.starts_with("setting,metric,level,mean,std,n\nS3_streak,psnr,0,2.000000,0.000000,1\n"));
}

TEST_CASE("markdown tables put single settings before mixtures") {
  CorrelationReport rep;
  std::vector<MetricSample> samples;
  for (int l = 0; l < 4; ++l) {
    samples.push_back({"M2_s+n", l, -1.0 * l});
    samples.push_back({"S5_metal", l, -2.0 * l});
  }
  rep.append(severity_correlation_report("ssim", samples));
  rep.append(severity_correlation_report("vif", samples));
  const auto md = correlation_markdown(rep, "Severity correlation");
  CHECK(md.find("| Setting | ssim | vif |") != std::string::npos);
  CHECK(md.find("| S5_metal | -1.0000/-1.0000 | -1.0000/-1.0000 |") != std::string::npos);
  CHECK(md.find("S5_metal") < md.find("M2_s+n"));
  const auto lm = level_stats_markdown(rep, "Levels");
  CHECK(lm.find("| S5_metal L3 | -6.0000 +- 0.0000 | -6.0000 +- 0.0000 |") != std::string::npos);
}

TEST_CASE("setting order") {
  CHECK(setting_less("S5_metal", "M1_b+n"));
  CHECK(setting_less("S1_noise", "S2_blur"));
  CHECK_FALSE(setting_less("M1_b+n", "S1_noise"));
}
