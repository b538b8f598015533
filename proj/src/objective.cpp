#include "pgru/objective.hpp"

#include <algorithm>
#include <cmath>

#include "pgru/error.hpp"

namespace pgru {

namespace {

void check_dims(const DenseVector& p1, const DenseVector& p2,
                std::span<const DenseVector> contrasts) {
  if (p1.dim() != p2.dim()) throw InvalidArgument("loss inputs have mismatched dimensions");
  for (const auto& c : contrasts) {
    if (c.dim() != p1.dim()) throw InvalidArgument("contrast embedding has mismatched dimension");
  }
}

}  // namespace

double dot_similarity(const DenseVector& a, const DenseVector& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("dot product of vectors with dims " + std::to_string(a.dim()) + " and " +
                          std::to_string(b.dim()));
  }
  return dot(a.span(), b.span());
}

double cosine_similarity(const DenseVector& a, const DenseVector& b) {
  const double ab = dot_similarity(a, b);
  const double na = std::sqrt(squared_norm(a.span()));
  const double nb = std::sqrt(squared_norm(b.span()));
  if (na <= 1e-12 || nb <= 1e-12) throw DegenerateVectorError("cosine of a near-zero vector");
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

std::vector<std::size_t> sample_contrasts(std::span<const std::string> pool, std::size_t k,
                                          std::span<const std::string> exclude, SeededRng& rng) {
  if (pool.size() <= k + 2) {
    throw InvalidArgument("contrast pool of " + std::to_string(pool.size()) +
                          " phrases is too small for k=" + std::to_string(k));
  }
  auto excluded = [&](const std::string& phrase) {
    return std::find(exclude.begin(), exclude.end(), phrase) != exclude.end();
  };
  // Exact eligibility count only for small pools; a large deduplicated pool
  // always has enough eligible phrases.
  if (pool.size() < 4 * (k + exclude.size()) + 16) {
    const auto eligible = static_cast<std::size_t>(
        std::count_if(pool.begin(), pool.end(), [&](const std::string& p) { return !excluded(p); }));
    if (eligible < k) {
      throw InvalidArgument("only " + std::to_string(eligible) +
                            " eligible contrast phrases for k=" + std::to_string(k));
    }
  }
  // Rejection sampling keeps each draw uniform over the remaining eligible set.
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  while (chosen.size() < k) {
    const std::size_t idx = rng.uniform_index(pool.size());
    if (std::find(chosen.begin(), chosen.end(), idx) != chosen.end()) continue;
    if (excluded(pool[idx])) continue;
    chosen.push_back(idx);
  }
  return chosen;
}

LossBreakdown contrastive_loss(const DenseVector& p1, const DenseVector& p2,
                               std::span<const DenseVector> contrasts, double margin) {
  check_dims(p1, p2, contrasts);
  if (!(margin > 0.0)) throw InvalidArgument("margin must be positive");
  const double positive = dot(p1.span(), p2.span());
  LossBreakdown out;
  out.per_contrast.reserve(contrasts.size());
  for (const auto& c : contrasts) {
    const double term = std::max(0.0, margin - positive + dot(p1.span(), c.span()));
    out.per_contrast.push_back(term);
    out.total += term;
    if (term > 0.0) ++out.violations;
  }
  return out;
}

LossGradients contrastive_loss_backward(const DenseVector& p1, const DenseVector& p2,
                                        std::span<const DenseVector> contrasts, double margin) {
  check_dims(p1, p2, contrasts);
  if (!(margin > 0.0)) throw InvalidArgument("margin must be positive");
  const std::size_t d = p1.dim();
  const double positive = dot(p1.span(), p2.span());
  LossGradients g{DenseVector(d), DenseVector(d), {}, {}};
  g.contrasts.reserve(contrasts.size());
  std::size_t n_active = 0;
  for (const auto& c : contrasts) {
    const bool active = margin - positive + dot(p1.span(), c.span()) > 0.0;
    g.active.push_back(active);
    if (active) {
      ++n_active;
      for (std::size_t j = 0; j < d; ++j) g.p1[j] += c[j] - p2[j];
      g.contrasts.push_back(p1);
    } else {
      g.contrasts.emplace_back(d);
    }
  }
  for (std::size_t j = 0; j < d; ++j) g.p2[j] = -static_cast<double>(n_active) * p1[j];
  return g;
}

double batch_loss(std::span<const LossBreakdown> losses) {
  if (losses.empty()) throw InvalidArgument("batch_loss of an empty batch");
  double sum = 0.0;
  for (const auto& l : losses) sum += l.total;
  return sum / static_cast<double>(losses.size());
}

}  // namespace pgru
