#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pgru {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {}
  DenseVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool all_finite() const;
  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// y = A x
DenseVector matvec(const DenseMatrix& a, const DenseVector& x);
// y += A x
void matvec_accumulate(const DenseMatrix& a, const DenseVector& x, DenseVector& y);
// y += Aᵀ x
void matvec_transposed_accumulate(const DenseMatrix& a, const DenseVector& x, DenseVector& y);
// A += u vᵀ
void add_outer(DenseMatrix& a, const DenseVector& u, const DenseVector& v);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// xoshiro256** seeded through splitmix64. Draws are bit-identical across
/// platforms; no std distributions are used.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  /// Independent stream keyed by (seed, stream...), e.g. (run_seed, epoch, example).
  static SeededRng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);
  static std::uint64_t mix(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

/// Ordered, named collection of matrices. Serves both as a parameter set
/// and as the gradient set mirroring it.
class TensorSet {
 public:
  void add(std::string name, DenseMatrix tensor);

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  DenseMatrix& operator[](std::size_t i) { return tensors_[i]; }
  const DenseMatrix& operator[](std::size_t i) const { return tensors_[i]; }

  /// Throws InvalidArgument for an unknown name.
  const DenseMatrix& at(std::string_view name) const;
  DenseMatrix& at(std::string_view name);

  /// Same key order and per-key shapes.
  bool same_layout(const TensorSet& other) const;
  TensorSet zeros_like() const;
  void set_zero();
  void add_scaled(const TensorSet& other, double scale);
  void scale(double factor);
  bool all_finite() const;
  std::size_t total_entries() const;

  friend bool operator==(const TensorSet&, const TensorSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<DenseMatrix> tensors_;
};

using GradientSet = TensorSet;

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, SeededRng& rng);

double global_norm(const TensorSet& grads);

struct ClipResult {
  GradientSet grads;
  double applied_scale = 1.0;
};

/// One Euclidean norm across every entry of every tensor; rescales all
/// entries jointly when it exceeds max_norm.
ClipResult clip_by_global_norm(GradientSet grads, double max_norm);

/// Inverted dropout: entries are 0 with probability `rate`, else 1/(1-rate).
DenseVector dropout_mask(std::size_t dim, double rate, SeededRng& rng);

/// params -= lr * grads, in place.
void sgd_step(TensorSet& params, const GradientSet& grads, double lr);

/// Rounds every entry to the nearest float (32-bit storage emulation).
void round_to_float(TensorSet& params);

}  // namespace pgru
