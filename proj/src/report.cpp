#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctdb/iqa.hpp"

namespace ctdb {

namespace {

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "NA"; }

std::vector<std::string> ordered_metrics(const CorrelationReport& report) {
  std::vector<std::string> metrics;
  auto add = [&](const std::string& m) {
    if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
  };
  for (const auto& r : report.rows) add(r.metric);
  for (const auto& s : report.level_stats) add(s.metric);
  return metrics;
}

}  // namespace

void CorrelationReport::append(const CorrelationReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  level_stats.insert(level_stats.end(), other.level_stats.begin(), other.level_stats.end());
  diagnostics.insert(diagnostics.end(), other.diagnostics.begin(), other.diagnostics.end());
}

bool setting_less(const std::string& a, const std::string& b) {
  auto group = [](const std::string& s) {
    if (!s.empty() && s.front() == 'S') return 0;
    if (!s.empty() && s.front() == 'M') return 1;
    return 2;
  };
  if (group(a) != group(b)) return group(a) < group(b);
  return a < b;
}

CorrelationReport severity_correlation_report(const std::string& metric,
                                              std::span<const MetricSample> samples) {
  std::map<std::string, std::vector<const MetricSample*>, decltype(&setting_less)> by_setting(&setting_less);
  for (const auto& s : samples) by_setting[s.setting].push_back(&s);

  CorrelationReport report;
  for (const auto& [setting, group] : by_setting) {
    std::map<int, std::vector<double>> by_level;
    for (const auto* s : group) by_level[s->severity].push_back(s->value);
    for (const auto& [level, values] : by_level) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      report.level_stats.push_back({setting, metric, level, mean,
                                    std::sqrt(sq / static_cast<double>(values.size())), values.size()});
    }

    if (group.size() < 3) {
      report.diagnostics.push_back("setting " + setting + " skipped for " + metric + ": only " +
                                   std::to_string(group.size()) + " samples");
      continue;
    }
    std::vector<double> severity;
    std::vector<double> value;
    for (const auto* s : group) {
      severity.push_back(static_cast<double>(s->severity));
      value.push_back(s->value);
    }
    report.rows.push_back({setting, metric, spearman(value, severity), pearson(value, severity), group.size()});
  }
  return report;
}

std::string correlation_csv(const CorrelationReport& report) {
  std::ostringstream out;
  out << "setting,metric,spearman,pearson,n\n";
  for (const auto& r : report.rows) {
    out << r.setting << ',' << r.metric << ',' << opt(r.spearman, 6) << ',' << opt(r.pearson, 6)
        << ',' << r.n << '\n';
  }
  return out.str();
}

std::string level_stats_csv(const CorrelationReport& report) {
  std::ostringstream out;
  out << "setting,metric,level,mean,std,n\n";
  for (const auto& s : report.level_stats) {
    out << s.setting << ',' << s.metric << ',' << s.level << ',' << fixed(s.mean, 6) << ','
        << fixed(s.std, 6) << ',' << s.n << '\n';
  }
  return out.str();
}

std::string correlation_markdown(const CorrelationReport& report, const std::string& title) {
  const auto metrics = ordered_metrics(report);
  std::vector<std::string> settings;
  for (const auto& r : report.rows) {
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
  }
  std::stable_sort(settings.begin(), settings.end(), setting_less);

  std::ostringstream out;
  out << "## " << title << "\n\nEntries are rho/r (Spearman/Pearson) against severity level.\n\n";
  out << "| Setting |";
  for (const auto& m : metrics) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& s : settings) {
    out << "| " << s << " |";
    for (const auto& m : metrics) {
      auto it = std::find_if(report.rows.begin(), report.rows.end(),
                             [&](const CorrelationRow& r) { return r.setting == s && r.metric == m; });
      if (it == report.rows.end()) {
        out << " - |";
      } else {
        out << ' ' << opt(it->spearman, 4) << '/' << opt(it->pearson, 4) << " |";
      }
    }
    out << '\n';
  }
  if (!report.diagnostics.empty()) {
    out << '\n';
    for (const auto& d : report.diagnostics) out << "- " << d << '\n';
  }
  return out.str();
}

std::string level_stats_markdown(const CorrelationReport& report, const std::string& title) {
  const auto metrics = ordered_metrics(report);
  std::vector<std::pair<std::string, int>> keys;
  for (const auto& s : report.level_stats) {
    std::pair<std::string, int> key{s.setting, s.level};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return setting_less(a.first, b.first);
    return a.second < b.second;
  });

  std::ostringstream out;
  out << "## " << title << "\n\nEntries are mean +- std per severity level.\n\n| Setting |";
  for (const auto& m : metrics) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& [setting, level] : keys) {
    out << "| " << setting << " L" << level << " |";
    for (const auto& m : metrics) {
      auto it = std::find_if(report.level_stats.begin(), report.level_stats.end(), [&](const LevelStat& s) {
        return s.setting == setting && s.level == level && s.metric == m;
      });
      if (it == report.level_stats.end()) {
        out << " - |";
      } else {
        out << ' ' << fixed(it->mean, 4) << " +- " << fixed(it->std, 4) << " |";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ctdb
