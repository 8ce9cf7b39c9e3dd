#include "ctdb/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "ctdb/io.hpp"

namespace ctdb {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_dim(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("embedding dimensions differ");
}

}  // namespace

void EmbeddingSet::add(Embedding e) {
  if (e.values.empty()) throw std::invalid_argument("embedding has no values");
  if (dim_ == 0) dim_ = e.values.size();
  if (e.values.size() != dim_) throw std::invalid_argument("embedding dimension mismatch for " + e.name);
  if (e.name.size() > 0xffffu) throw std::invalid_argument("embedding name too long");
  for (float v : e.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite embedding value in " + e.name);
  }
  if (find(e.name)) throw std::invalid_argument("duplicate embedding name " + e.name);
  entries_.push_back(std::move(e));
}

const Embedding* EmbeddingSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<const Embedding*> EmbeddingSet::with_prefix(std::string_view prefix) const {
  std::vector<const Embedding*> out;
  for (const auto& e : entries_) {
    if (e.name.starts_with(prefix)) out.push_back(&e);
  }
  return out;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  std::vector<std::uint8_t> out{'C', 'T', 'D', 'E'};
  le::put_u32(out, kFormatVersion);
  le::put_u32(out, static_cast<std::uint32_t>(set.size()));
  le::put_u32(out, static_cast<std::uint32_t>(set.dim()));
  for (const auto& e : set.entries()) {
    le::put_u16(out, static_cast<std::uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    for (float v : e.values) le::put_f32(out, v);
  }
  return out;
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  le::Reader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), "CTDE", 4) != 0) throw std::runtime_error("bad magic, expected CTDE");
  if (auto version = in.u32(); version != kFormatVersion) {
    throw std::runtime_error("unsupported CTDE version " + std::to_string(version));
  }
  const std::size_t count = in.u32();
  const std::size_t dim = in.u32();
  if (count > 0 && dim == 0) throw std::runtime_error("CTDE dimension is zero");
  EmbeddingSet set(dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = in.u16();
    auto name = in.take(len);
    Embedding e{std::string(name.begin(), name.end()), std::vector<float>(dim)};
    for (float& v : e.values) v = in.f32();
    set.add(std::move(e));
  }
  if (in.remaining() != 0) throw std::runtime_error("trailing bytes after CTDE entries");
  return set;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  write_file(path, encode_embeddings(set));
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

Vector to_vector(std::span<const float> values) { return {values.begin(), values.end()}; }

Vector normalized(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("empty vector");
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite vector component");
    sq += x * x;
  }
  if (!(sq > 0.0)) throw std::invalid_argument("zero-norm vector");
  const double norm = std::sqrt(sq);
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

Prototypes prototypes(std::span<const Vector> high, std::span<const Vector> low) {
  auto mean_of = [](std::span<const Vector> set) {
    if (set.empty()) throw std::invalid_argument("prompt set is empty");
    Vector mean(set.front().size(), 0.0);
    for (const auto& v : set) {
      require_dim(v.size(), mean.size());
      const auto u = normalized(v);
      for (std::size_t i = 0; i < u.size(); ++i) mean[i] += u[i];
    }
    for (double& x : mean) x /= static_cast<double>(set.size());
    return mean;
  };
  Prototypes p{mean_of(high), mean_of(low)};
  require_dim(p.high.size(), p.low.size());
  return p;
}

QualityAxis quality_axis(std::span<const double> mu_high, std::span<const double> mu_low) {
  require_dim(mu_high.size(), mu_low.size());
  if (mu_high.empty()) throw std::invalid_argument("empty prototypes");
  Vector diff(mu_high.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = mu_high[i] - mu_low[i];
  const double norm = std::sqrt(dot(diff, diff));
  if (!(norm >= kDegenerateAxisNorm)) throw std::invalid_argument("degenerate quality axis: prototypes coincide");
  for (double& x : diff) x /= norm;
  return {std::move(diff), std::sqrt(dot(mu_high, mu_high)), std::sqrt(dot(mu_low, mu_low))};
}

QualityAxis quality_axis(const EmbeddingSet& set) {
  std::vector<Vector> high;
  std::vector<Vector> low;
  for (const auto* e : set.with_prefix("prompt:H:")) high.push_back(to_vector(e->values));
  for (const auto* e : set.with_prefix("prompt:L:")) low.push_back(to_vector(e->values));
  const auto p = prototypes(high, low);
  return quality_axis(p.high, p.low);
}

double global_score(std::span<const double> z, const QualityAxis& axis) {
  require_dim(z.size(), axis.dim());
  return dot(normalized(z), axis.q);
}

std::vector<double> patch_scores(std::span<const Vector> tokens, const QualityAxis& axis) {
  std::vector<double> scores;
  scores.reserve(tokens.size());
  for (const auto& t : tokens) {
    require_dim(t.size(), axis.dim());
    scores.push_back(dot(normalized(t), axis.q));
  }
  return scores;
}

PooledScores pool(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("cannot pool an empty score vector");
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  double mx = scores.front();
  for (double s : scores) {
    sum += s;
    mx = std::max(mx, s);
  }
  const double mean = sum / n;
  double sq = 0.0;
  for (double s : scores) sq += (s - mean) * (s - mean);
  return {mean, mx, std::sqrt(sq / n)};
}

SemanticFeatures semantic_features(std::span<const double> z, std::span<const Vector> tokens,
                                   const QualityAxis& axis) {
  SemanticFeatures f;
  f.global = global_score(z, axis);
  f.patch = patch_scores(tokens, axis);
  f.pooled = pool(f.patch);
  return f;
}

double embedding_drift(std::span<const double> a, std::span<const double> b) {
  require_dim(a.size(), b.size());
  if (a.empty()) throw std::invalid_argument("empty embedding");
  const double aa = dot(a, a);
  const double bb = dot(b, b);
  if (!(aa > 0.0) || !(bb > 0.0)) throw std::invalid_argument("zero embedding in drift");
  const double cosine = std::clamp(dot(a, b) / std::sqrt(aa * bb), -1.0, 1.0);
  return 1.0 - cosine;
}

CorrelationReport drift_severity_report(const EmbeddingSet& set, std::span<const DriftPair> pairs) {
  std::vector<MetricSample> samples;
  std::vector<std::string> missing;
  for (const auto& p : pairs) {
    const auto* ref = set.find(p.reference_name);
    const auto* deg = set.find(p.degraded_name);
    if (!ref || !deg) {
      missing.push_back("missing embedding for " + (ref ? p.degraded_name : p.reference_name));
      continue;
    }
    samples.push_back({p.setting, p.severity, embedding_drift(to_vector(ref->values), to_vector(deg->values))});
  }
  auto report = severity_correlation_report("drift", samples);
  report.diagnostics.insert(report.diagnostics.begin(), missing.begin(), missing.end());
  return report;
}

}  // namespace ctdb
