#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pgru/numeric.hpp"

namespace pgru {

/// Weights of a bias-free GRU cell:
///   z_t = sigmoid(W_z x_t + U_z h_{t-1})
///   r_t = sigmoid(W_r x_t + U_r h_{t-1})
///   h~_t = tanh(W x_t + U (r_t * h_{t-1}))
///   h_t = (1 - z_t) * h_{t-1} + z_t * h~_t
/// With `use_bias` the three pre-activations gain b_h, b_z, b_r (stored as hidden x 1).
class GruParams {
 public:
  static constexpr std::size_t kW = 0, kU = 1, kWz = 2, kUz = 3, kWr = 4, kUr = 5;
  static constexpr std::size_t kBh = 6, kBz = 7, kBr = 8;

  GruParams() = default;
  static GruParams zeros(std::size_t input_dim, std::size_t hidden_dim, bool use_bias = false);
  /// Glorot-uniform weights drawn in tensor order; biases start at zero.
  static GruParams glorot(std::size_t input_dim, std::size_t hidden_dim, bool use_bias, SeededRng& rng);
  /// Validates names and shapes of a deserialized tensor set.
  static GruParams from_tensors(TensorSet tensors);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  bool has_bias() const { return tensors_.size() == 9; }

  const DenseMatrix& W() const { return tensors_[kW]; }
  const DenseMatrix& U() const { return tensors_[kU]; }
  const DenseMatrix& W_z() const { return tensors_[kWz]; }
  const DenseMatrix& U_z() const { return tensors_[kUz]; }
  const DenseMatrix& W_r() const { return tensors_[kWr]; }
  const DenseMatrix& U_r() const { return tensors_[kUr]; }

  TensorSet& tensors() { return tensors_; }
  const TensorSet& tensors() const { return tensors_; }

  friend bool operator==(const GruParams&, const GruParams&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  TensorSet tensors_;
};

struct GruStepCache {
  DenseVector x;       // raw input
  DenseVector x_hat;   // input after dropout
  DenseVector h_prev;
  DenseVector z;
  DenseVector r;
  DenseVector h_tilde;
  DenseVector h;
  std::optional<DenseVector> mask;
};

struct PhraseEmbedding {
  DenseVector vector;
  std::size_t token_count = 0;
};

struct GruStepResult {
  DenseVector h;
  GruStepCache cache;
};

/// The mask, when given, scales x_t before the three input products.
GruStepResult gru_cell_forward(const GruParams& params, const DenseVector& x,
                               const DenseVector& h_prev,
                               const std::optional<DenseVector>& dropout_mask = std::nullopt);

struct GruEncodeResult {
  PhraseEmbedding embedding;
  std::vector<GruStepCache> caches;
};

/// Folds the cell over tokens from h_0 = 0. A non-null rng switches on
/// training mode: one input dropout mask per step at `dropout_rate`.
GruEncodeResult gru_encode(const GruParams& params, std::span<const DenseVector> tokens,
                           SeededRng* dropout_rng = nullptr, double dropout_rate = 0.0);

struct GruBackwardResult {
  GradientSet param_grads;
  std::vector<DenseVector> input_grads;
};

/// Backpropagation through time from a gradient on the final hidden state.
GruBackwardResult gru_backward(const GruParams& params, std::span<const GruStepCache> caches,
                               const DenseVector& grad_h_last);

/// Accumulating form: adds into `grads` (which must mirror params) and, if
/// given, writes dL/dx_t into `input_grads`.
void gru_backward_accumulate(const GruParams& params, std::span<const GruStepCache> caches,
                             const DenseVector& grad_h_last, GradientSet& grads,
                             std::vector<DenseVector>* input_grads);

PhraseEmbedding sum_encode(std::span<const DenseVector> tokens);
PhraseEmbedding avg_encode(std::span<const DenseVector> tokens);

}  // namespace pgru
