#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pgru/numeric.hpp"

namespace pgru {

using TokenSeq = std::vector<std::string>;

/// A paraphrase pair with its k contrast phrases.
struct TrainingExample {
  TokenSeq p1;
  TokenSeq p2;
  std::vector<TokenSeq> contrasts;
};

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_contrast;
  std::size_t violations = 0;
};

double dot_similarity(const DenseVector& a, const DenseVector& b);

/// Throws DegenerateVectorError when either norm is at most 1e-12.
double cosine_similarity(const DenseVector& a, const DenseVector& b);

/// Draws k distinct pool indices uniformly without replacement, skipping any
/// phrase string-equal to an entry of `exclude`. Indices come back in draw order.
std::vector<std::size_t> sample_contrasts(std::span<const std::string> pool, std::size_t k,
                                          std::span<const std::string> exclude, SeededRng& rng);

/// per_contrast[i] = max(0, margin - p1.p2 + p1.c_i)
LossBreakdown contrastive_loss(const DenseVector& p1, const DenseVector& p2,
                               std::span<const DenseVector> contrasts, double margin = 1.0);

struct LossGradients {
  DenseVector p1;
  DenseVector p2;
  std::vector<DenseVector> contrasts;
  std::vector<bool> active;
};

/// Exact (sub)gradients of contrastive_loss; a term sitting exactly on the
/// hinge kink contributes zero.
LossGradients contrastive_loss_backward(const DenseVector& p1, const DenseVector& p2,
                                        std::span<const DenseVector> contrasts,
                                        double margin = 1.0);

/// Mean of the per-example totals.
double batch_loss(std::span<const LossBreakdown> losses);

}  // namespace pgru
