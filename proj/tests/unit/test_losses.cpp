#include <cmath>
#include <random>

#include "ctdb/losses.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ctdb;

namespace {

double naive_ce(const Vector& z, std::size_t y) {
  double s = 0.0;
  for (double v : z) s += std::exp(v);
  return std::log(s) - z[y];
}

double naive_supcon(const std::vector<Vector>& raw, const std::vector<int>& labels, double tau, bool* degenerate) {
  std::vector<Vector> u;
  for (const auto& z : raw) {
    double n = 0.0;
    for (double x : z) n += x * x;
    Vector v(z);
    for (double& x : v) x /= std::sqrt(n);
    u.push_back(v);
  }
  auto sim = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < u[i].size(); ++k) s += u[i][k] * u[j][k];
    return s / tau;
  };
  double total = 0.0;
  int anchors = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double denom = 0.0;
    int positives = 0;
    for (std::size_t a = 0; a < u.size(); ++a) {
      if (a == i) continue;
      denom += std::exp(sim(i, a));
      if (labels[a] == labels[i]) ++positives;
    }
    if (positives == 0) continue;
    double li = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      li -= std::log(std::exp(sim(i, p)) / denom);
    }
    total += li / positives;
    ++anchors;
  }
  *degenerate = anchors == 0;
  return anchors ? total / anchors : 0.0;
}

Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t classes, std::size_t dim) {
  Batch b;
  std::uniform_real_distribution<double> sev(0.0, 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    b.logits.push_back(test::random_vector(rng, classes, -3.0, 3.0));
    b.classes.push_back(static_cast<int>(rng() % classes));
    b.true_severity.push_back(static_cast<double>(rng() % 4));
    b.pred_severity.push_back(sev(rng));
    b.embeddings.push_back(test::random_vector(rng, dim));
    b.contrastive_labels.push_back(contrastive_label(b.classes.back(), static_cast<int>(b.true_severity.back())));
  }
  return b;
}

double objective(const Batch& b, const LossWeights& w) { return total_loss(batch_losses(b, w), w); }

// Central difference, skipping coordinates whose step crosses a kink.
void check_gradient(Batch b, const LossWeights& w) {
  const auto g = total_loss_gradient(b, w);
  const double h = 1e-6;
  auto probe = [&](double& x, double analytic) {
    const double x0 = x;
    x = x0 + h;
    const double up = objective(b, w);
    x = x0 - h;
    const double down = objective(b, w);
    x = x0;
    const double mid = objective(b, w);
    const double fd = (up - down) / (2 * h);
    const double curvature = std::abs(up + down - 2 * mid) / (h * h);
    if (curvature > 1e3) return;  // kink between the probes
    CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(1.0, std::abs(analytic)));
  };
  for (std::size_t i = 0; i < b.logits.size(); ++i) {
    for (std::size_t k = 0; k < b.logits[i].size(); ++k) probe(b.logits[i][k], g.logits[i][k]);
    probe(b.pred_severity[i], g.severity[i]);
    for (std::size_t k = 0; k < b.embeddings[i].size(); ++k) probe(b.embeddings[i][k], g.embeddings[i][k]);
  }
}

}  // namespace

TEST_CASE("cross entropy matches the naive form and survives large logits") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto z = test::random_vector(rng, 2 + t % 6, -5.0, 5.0);
    const std::size_t y = rng() % z.size();
    CHECK(cross_entropy(z, y) == doctest::Approx(naive_ce(z, y)).epsilon(1e-12));
  }
  const Vector big{1000.0, 1000.0};
  CHECK(cross_entropy(big, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const Vector uniform{0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(cross_entropy(uniform, 3) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy(uniform, 5), std::invalid_argument);
  const std::vector<Vector> batch{{0.0, 0.0}, {1000.0, 0.0}};
  const std::vector<int> labels{1, 0};
  CHECK(cross_entropy(batch, labels) == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("smooth L1 switches from quadratic to linear at one") {
  const Vector p{0.5, -0.5, 3.0, 0.0};
  const Vector t{0.0, 0.0, 0.0, 1.0};
  CHECK(smooth_l1(p, t) == doctest::Approx((0.125 + 0.125 + 2.5 + 0.5) / 4.0).epsilon(1e-15));
  CHECK(smooth_l1_gradient(p, t) == Vector{0.125, -0.125, 0.25, -0.25});
  CHECK_THROWS_AS(smooth_l1(p, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("rank loss hinges on ordered pairs only") {
  const Vector truth{0.0, 1.0, 2.0};
  // pairs (1,0), (2,0), (2,1): pred differences 0.3, 0.2, -0.1
  const Vector pred{1.0, 1.3, 1.2};
  const auto v = rank_loss(pred, truth, 0.5);
  CHECK_FALSE(v.degenerate);
  CHECK(v.value == doctest::Approx((0.2 + 0.3 + 0.6) / 3.0).epsilon(1e-14));
  const auto wide = rank_loss(Vector{0.0, 1.0, 2.0}, truth, 0.5);
  CHECK(wide.value == 0.0);

  const auto tied = rank_loss(Vector{0.0, 1.0}, Vector{2.0, 2.0}, 0.5);
  CHECK(tied.degenerate);
  CHECK(tied.value == 0.0);
  CHECK(rank_loss_gradient(Vector{0.0, 1.0}, Vector{2.0, 2.0}, 0.5) == Vector{0.0, 0.0});
}

TEST_CASE("supervised contrastive loss matches the naive form") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 10;
    std::vector<Vector> z;
    for (std::size_t i = 0; i < n; ++i) z.push_back(test::random_vector(rng, 6));
    const auto labels = test::random_labels(rng, n, 3);
    bool degenerate = false;
    const double expect = naive_supcon(z, labels, 0.07, &degenerate);
    const auto v = supcon_loss(z, labels, 0.07);
    CHECK(v.degenerate == degenerate);
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("contrastive loss without positive pairs is degenerate") {
  const std::vector<Vector> z{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  const std::vector<int> labels{0, 1, 2};
  const auto v = supcon_loss(z, labels, 0.1);
  CHECK(v.degenerate);
  CHECK(v.value == 0.0);
  for (const auto& g : supcon_gradient(z, labels, 0.1)) CHECK(g == Vector{0.0, 0.0});
  CHECK_THROWS_AS(supcon_loss(z, labels, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(supcon_loss(std::vector<Vector>{{1.0, 0.0}, {0.0, 0.0}}, std::vector<int>{0, 0}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("two identical positives reach the closed form") {
  // Two samples, same label, identical direction: loss = -log(e^{1/t} / e^{1/t}) = 0.
  const std::vector<Vector> same{{1.0, 2.0}, {2.0, 4.0}};
  CHECK(supcon_loss(same, std::vector<int>{3, 3}, 0.07).value == doctest::Approx(0.0).scale(1.0));
  // Three samples, anchors 0 and 1 positive to each other, 2 orthogonal to both.
  const std::vector<Vector> z{{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  const double t = 0.5;
  const double per_anchor = -std::log(std::exp(1.0 / t) / (std::exp(1.0 / t) + 1.0));
  CHECK(supcon_loss(z, std::vector<int>{0, 0, 1}, t).value == doctest::Approx(per_anchor).epsilon(1e-14));
}

TEST_CASE("weighted total with default weights") {
  CHECK(total_loss({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(2.35).epsilon(1e-15));
  CHECK(total_loss({0.5, 2.0, 0.0, 0.0}, LossWeights{2.0, 0.0, 0.0, 0.5, 0.07}) == doctest::Approx(4.5));
  LossWeights bad;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.reg = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(contrastive_label(2, 3) == 11);
}

TEST_CASE("batch losses combine the individual terms") {
  std::mt19937_64 rng(9);
  const auto b = random_batch(rng, 8, 5, 4);
  const auto c = batch_losses(b);
  CHECK(c.cls == doctest::Approx(cross_entropy(b.logits, b.classes)));
  CHECK(c.reg == doctest::Approx(smooth_l1(b.pred_severity, b.true_severity)));
  CHECK(c.rank == doctest::Approx(rank_loss(b.pred_severity, b.true_severity, 0.5).value));
  CHECK(c.con == doctest::Approx(supcon_loss(b.embeddings, b.contrastive_labels, 0.07).value));
  Batch broken = b;
  broken.classes.pop_back();
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
}

TEST_CASE("analytic gradients agree with central differences") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    LossWeights w;
    if (t % 2) w = LossWeights{0.7, 1.1, 0.4, 0.3, 0.2};
    check_gradient(random_batch(rng, 4 + t % 5, 5, 3 + t % 4), w);
  }
}
