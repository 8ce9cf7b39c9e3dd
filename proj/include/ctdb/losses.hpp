#pragma once

// Multi-task objective terms for joint degradation classification and
// severity estimation, as pure functions with analytic gradients.

#include <cstddef>
#include <span>
#include <vector>

namespace ctdb {

using Vector = std::vector<double>;

struct LossWeights {
  double reg = 1.0;
  double rank = 0.3;
  double con = 0.05;
  double margin = 0.5;        // severity units
  double temperature = 0.07;

  void validate() const;
};

/// A loss value with a flag for the degenerate case (no ordered pairs, no
/// anchor with a positive) in which the value is defined as 0.
struct LossValue {
  double value = 0.0;
  bool degenerate = false;
};

/// -log softmax(logits)[label] with max-shift stabilization.
double cross_entropy(std::span<const double> logits, std::size_t label);
/// Batch mean.
double cross_entropy(std::span<const Vector> logits, std::span<const int> labels);

/// Batch mean of 0.5 e^2 (|e| < 1) or |e| - 0.5, e = pred - truth.
double smooth_l1(std::span<const double> pred, std::span<const double> truth);

/// Mean hinge max(0, margin - (pred_i - pred_j)) over pairs with
/// truth_i > truth_j.
LossValue rank_loss(std::span<const double> pred, std::span<const double> truth, double margin);

/// Supervised contrastive loss on unit-normalized embeddings. Samples with the
/// same label are positives; anchors without positives are excluded.
LossValue supcon_loss(std::span<const Vector> embeddings, std::span<const int> labels,
                      double temperature);

/// Positive-pair label: same degradation class and same severity level.
constexpr int contrastive_label(int degradation_class, int severity_level) {
  return degradation_class * 4 + severity_level;
}

struct LossComponents {
  double cls = 0.0;
  double reg = 0.0;
  double rank = 0.0;
  double con = 0.0;
};

/// cls + reg_w * reg + rank_w * rank + con_w * con.
double total_loss(const LossComponents& c, const LossWeights& w = {});

struct Batch {
  std::vector<Vector> logits;
  std::vector<int> classes;
  Vector pred_severity;
  Vector true_severity;
  std::vector<Vector> embeddings;  // fused, unnormalized
  std::vector<int> contrastive_labels;

  void validate() const;
};

LossComponents batch_losses(const Batch& batch, const LossWeights& w = {});

struct BatchGradient {
  std::vector<Vector> logits;
  Vector severity;
  std::vector<Vector> embeddings;
};

std::vector<Vector> cross_entropy_gradient(std::span<const Vector> logits, std::span<const int> labels);
Vector smooth_l1_gradient(std::span<const double> pred, std::span<const double> truth);
Vector rank_loss_gradient(std::span<const double> pred, std::span<const double> truth, double margin);
/// Gradient with respect to the raw (unnormalized) embeddings.
std::vector<Vector> supcon_gradient(std::span<const Vector> embeddings, std::span<const int> labels,
                                    double temperature);

/// Gradient of total_loss(batch_losses(batch, w), w).
BatchGradient total_loss_gradient(const Batch& batch, const LossWeights& w = {});

}  // namespace ctdb
