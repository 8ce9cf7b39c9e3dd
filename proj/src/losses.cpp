#include "ctdb/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ctdb {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string("size mismatch: ") + what);
}

// Softmax with max-shift, and the log of its normalizer.
struct SoftmaxResult {
  Vector p;
  double log_sum = 0.0;  // log sum exp(logit)
};

SoftmaxResult softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  SoftmaxResult out{Vector(logits.size()), 0.0};
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.p[k] = std::exp(logits[k] - mx);
    sum += out.p[k];
  }
  for (double& v : out.p) v /= sum;
  out.log_sum = mx + std::log(sum);
  return out;
}

std::size_t checked_label(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw std::invalid_argument("class label out of range");
  }
  return static_cast<std::size_t>(label);
}

std::vector<Vector> unit_embeddings(std::span<const Vector> embeddings) {
  std::vector<Vector> out;
  out.reserve(embeddings.size());
  for (const auto& z : embeddings) {
    require_same_size(z.size(), embeddings.front().size(), "embedding dimension");
    require_finite(z, "embedding");
    double sq = 0.0;
    for (double x : z) sq += x * x;
    if (!(sq > 0.0)) throw std::invalid_argument("zero embedding");
    const double norm = std::sqrt(sq);
    Vector u(z);
    for (double& x : u) x /= norm;
    out.push_back(std::move(u));
  }
  return out;
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_supcon_inputs(std::span<const Vector> embeddings, std::span<const int> labels, double temperature) {
  if (embeddings.size() < 2) throw std::invalid_argument("contrastive loss needs at least 2 samples");
  require_same_size(embeddings.size(), labels.size(), "embeddings and labels");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

// Per-anchor weights d(loss_i)/d(sim_ia) for anchors with positives, and the
// anchor count. sim is u_i.u_a / tau.
struct SupconTerms {
  double value = 0.0;
  std::size_t anchors = 0;
  std::vector<Vector> weight;  // weight[i][a], zero for excluded anchors
};

SupconTerms supcon_terms(const std::vector<Vector>& u, std::span<const int> labels, double temperature) {
  const std::size_t n = u.size();
  SupconTerms t;
  t.weight.assign(n, Vector(n, 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i && labels[a] == labels[i]) ++positives;
    }
    if (positives == 0) continue;
    ++t.anchors;
    Vector logits;
    logits.reserve(n - 1);
    for (std::size_t a = 0; a < n; ++a) {
      if (a != i) logits.push_back(dot(u[i], u[a]) / temperature);
    }
    const auto sm = softmax(logits);
    double anchor = 0.0;
    std::size_t k = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      const bool positive = labels[a] == labels[i];
      if (positive) anchor -= (logits[k] - sm.log_sum);
      t.weight[i][a] = sm.p[k] - (positive ? 1.0 / static_cast<double>(positives) : 0.0);
      ++k;
    }
    total += anchor / static_cast<double>(positives);
  }
  if (t.anchors > 0) t.value = total / static_cast<double>(t.anchors);
  return t;
}

}  // namespace

void LossWeights::validate() const {
  if (!(reg >= 0.0) || !(rank >= 0.0) || !(con >= 0.0)) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("ranking margin must be nonnegative");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (logits.size() < 2) throw std::invalid_argument("cross entropy needs at least 2 classes");
  if (label >= logits.size()) throw std::invalid_argument("class label out of range");
  require_finite(logits, "logit");
  return softmax(logits).log_sum - logits[label];
}

double cross_entropy(std::span<const Vector> logits, std::span<const int> labels) {
  if (logits.empty()) throw std::invalid_argument("empty batch");
  require_same_size(logits.size(), labels.size(), "logits and labels");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    sum += cross_entropy(logits[i], checked_label(labels[i], logits[i].size()));
  }
  return sum / static_cast<double>(logits.size());
}

double smooth_l1(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw std::invalid_argument("empty batch");
  require_same_size(pred.size(), truth.size(), "predictions and targets");
  require_finite(pred, "prediction");
  require_finite(truth, "target");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - truth[i]);
    sum += e < 1.0 ? 0.5 * e * e : e - 0.5;
  }
  return sum / static_cast<double>(pred.size());
}

LossValue rank_loss(std::span<const double> pred, std::span<const double> truth, double margin) {
  require_same_size(pred.size(), truth.size(), "predictions and targets");
  require_finite(pred, "prediction");
  require_finite(truth, "target");
  if (!(margin >= 0.0)) throw std::invalid_argument("ranking margin must be nonnegative");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      if (!(truth[i] > truth[j])) continue;
      ++pairs;
      sum += std::max(0.0, margin - (pred[i] - pred[j]));
    }
  }
  if (pairs == 0) return {0.0, true};
  return {sum / static_cast<double>(pairs), false};
}

LossValue supcon_loss(std::span<const Vector> embeddings, std::span<const int> labels, double temperature) {
  check_supcon_inputs(embeddings, labels, temperature);
  const auto t = supcon_terms(unit_embeddings(embeddings), labels, temperature);
  if (t.anchors == 0) return {0.0, true};
  return {t.value, false};
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  return c.cls + w.reg * c.reg + w.rank * c.rank + w.con * c.con;
}

void Batch::validate() const {
  const std::size_t n = logits.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  require_same_size(classes.size(), n, "classes");
  require_same_size(pred_severity.size(), n, "predicted severities");
  require_same_size(true_severity.size(), n, "true severities");
  require_same_size(embeddings.size(), n, "embeddings");
  require_same_size(contrastive_labels.size(), n, "contrastive labels");
  for (const auto& l : logits) require_same_size(l.size(), logits.front().size(), "logit width");
}

LossComponents batch_losses(const Batch& batch, const LossWeights& w) {
  batch.validate();
  w.validate();
  return {cross_entropy(batch.logits, batch.classes), smooth_l1(batch.pred_severity, batch.true_severity),
          rank_loss(batch.pred_severity, batch.true_severity, w.margin).value,
          supcon_loss(batch.embeddings, batch.contrastive_labels, w.temperature).value};
}

std::vector<Vector> cross_entropy_gradient(std::span<const Vector> logits, std::span<const int> labels) {
  if (logits.empty()) throw std::invalid_argument("empty batch");
  require_same_size(logits.size(), labels.size(), "logits and labels");
  const double scale = 1.0 / static_cast<double>(logits.size());
  std::vector<Vector> grad;
  grad.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() < 2) throw std::invalid_argument("cross entropy needs at least 2 classes");
    require_finite(logits[i], "logit");
    auto g = softmax(logits[i]).p;
    g[checked_label(labels[i], g.size())] -= 1.0;
    for (double& v : g) v *= scale;
    grad.push_back(std::move(g));
  }
  return grad;
}

Vector smooth_l1_gradient(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw std::invalid_argument("empty batch");
  require_same_size(pred.size(), truth.size(), "predictions and targets");
  const double scale = 1.0 / static_cast<double>(pred.size());
  Vector g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    g[i] = scale * (std::abs(e) < 1.0 ? e : (e > 0.0 ? 1.0 : -1.0));
  }
  return g;
}

Vector rank_loss_gradient(std::span<const double> pred, std::span<const double> truth, double margin) {
  require_same_size(pred.size(), truth.size(), "predictions and targets");
  Vector g(pred.size(), 0.0);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      if (!(truth[i] > truth[j])) continue;
      ++pairs;
      if (margin - (pred[i] - pred[j]) > 0.0) {
        g[i] -= 1.0;
        g[j] += 1.0;
      }
    }
  }
  if (pairs > 0) {
    for (double& v : g) v /= static_cast<double>(pairs);
  }
  return g;
}

std::vector<Vector> supcon_gradient(std::span<const Vector> embeddings, std::span<const int> labels,
                                    double temperature) {
  check_supcon_inputs(embeddings, labels, temperature);
  const auto u = unit_embeddings(embeddings);
  const auto t = supcon_terms(u, labels, temperature);
  const std::size_t n = u.size();
  const std::size_t dim = u.front().size();
  std::vector<Vector> grad_u(n, Vector(dim, 0.0));
  if (t.anchors == 0) return grad_u;
  const double scale = 1.0 / (static_cast<double>(t.anchors) * temperature);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < n; ++a) {
      const double w = t.weight[i][a] * scale;
      if (w == 0.0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        grad_u[i][d] += w * u[a][d];
        grad_u[a][d] += w * u[i][d];
      }
    }
  }
  // Chain through u = z / |z|: dL/dz = (g - u (u.g)) / |z|.
  std::vector<Vector> grad(n, Vector(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = std::sqrt(dot(embeddings[i], embeddings[i]));
    const double ug = dot(u[i], grad_u[i]);
    for (std::size_t d = 0; d < dim; ++d) grad[i][d] = (grad_u[i][d] - u[i][d] * ug) / norm;
  }
  return grad;
}

BatchGradient total_loss_gradient(const Batch& batch, const LossWeights& w) {
  batch.validate();
  w.validate();
  BatchGradient g;
  g.logits = cross_entropy_gradient(batch.logits, batch.classes);
  const auto reg = smooth_l1_gradient(batch.pred_severity, batch.true_severity);
  const auto rank = rank_loss_gradient(batch.pred_severity, batch.true_severity, w.margin);
  g.severity.resize(reg.size());
  for (std::size_t i = 0; i < reg.size(); ++i) g.severity[i] = w.reg * reg[i] + w.rank * rank[i];
  g.embeddings = supcon_gradient(batch.embeddings, batch.contrastive_labels, w.temperature);
  for (auto& v : g.embeddings) {
    for (double& x : v) x *= w.con;
  }
  return g;
}

}  // namespace ctdb
