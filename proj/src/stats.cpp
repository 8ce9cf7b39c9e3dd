#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "ctdb/iqa.hpp"

namespace ctdb {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t min_len) {
  if (a != b) throw std::invalid_argument("input lengths differ");
  if (a < min_len) throw std::invalid_argument("too few samples");
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return std::nullopt;
  }
  auto flat = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (flat(x) || flat(y)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) return std::nullopt;
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

ErrorStats mae_rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred.size(), truth.size(), 1);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const double n = static_cast<double>(pred.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

std::optional<double> qwk(std::span<const int> pred, std::span<const int> truth, int num_classes) {
  check_lengths(pred.size(), truth.size(), 1);
  if (num_classes < 2) throw std::invalid_argument("QWK needs at least two classes");
  const auto k = static_cast<std::size_t>(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= num_classes || truth[i] < 0 || truth[i] >= num_classes) {
      throw std::invalid_argument("label out of range");
    }
  }
  auto single_class = [](std::span<const int> v) {
    return std::all_of(v.begin(), v.end(), [&](int a) { return a == v.front(); });
  };
  if (single_class(pred) && single_class(truth)) return std::nullopt;

  std::vector<double> observed(k * k, 0.0);
  std::vector<double> hist_true(k, 0.0);
  std::vector<double> hist_pred(k, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(pred[i]);
    observed[t * k + p] += 1.0;
    hist_true[t] += 1.0;
    hist_pred[p] += 1.0;
  }
  const double n = static_cast<double>(pred.size());
  const double norm = static_cast<double>((k - 1) * (k - 1));
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double weight = d * d / norm;
      num += weight * observed[i * k + j];
      den += weight * hist_true[i] * hist_pred[j] / n;
    }
  }
  if (den == 0.0) return std::nullopt;
  return 1.0 - num / den;
}

ClassificationStats accuracy_macro_f1(std::span<const int> pred, std::span<const int> truth,
                                      std::optional<int> num_classes) {
  check_lengths(pred.size(), truth.size(), 1);
  std::set<int> classes(pred.begin(), pred.end());
  classes.insert(truth.begin(), truth.end());
  if (num_classes) {
    for (int c = 0; c < *num_classes; ++c) classes.insert(c);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;

  double f1_sum = 0.0;
  for (int c : classes) {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp += 1.0;
      else if (pred[i] == c) fp += 1.0;
      else if (truth[i] == c) fn += 1.0;
    }
    const double denom = 2.0 * tp + fp + fn;
    f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(pred.size()),
          f1_sum / static_cast<double>(classes.size())};
}

SeverityEvalReport evaluate_severity(std::span<const int> pred, std::span<const int> truth,
                                     int num_classes) {
  std::vector<double> p(pred.begin(), pred.end());
  std::vector<double> t(truth.begin(), truth.end());
  const auto err = mae_rmse(p, t);
  const auto cls = accuracy_macro_f1(pred, truth);
  return {err.mae, err.rmse, qwk(pred, truth, num_classes), cls.accuracy, cls.macro_f1};
}

}  // namespace ctdb
