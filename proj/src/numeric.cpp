#include "pgru/numeric.hpp"

#include <cmath>
#include <numbers>

#include "pgru/error.hpp"

namespace pgru {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

bool finite_span(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

bool DenseVector::all_finite() const { return finite_span(values_); }

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("matrix value count " + std::to_string(values_.size()) +
                          " does not match shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
}

bool DenseMatrix::all_finite() const { return finite_span(values_); }

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  DenseVector y(a.rows());
  matvec_accumulate(a, x, y);
  return y;
}

void matvec_accumulate(const DenseMatrix& a, const DenseVector& x, DenseVector& y) {
  if (a.cols() != x.dim() || a.rows() != y.dim()) {
    throw InvalidArgument("matvec dimension mismatch");
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    y[r] += dot(a.row(r), x.span());
  }
}

void matvec_transposed_accumulate(const DenseMatrix& a, const DenseVector& x, DenseVector& y) {
  if (a.rows() != x.dim() || a.cols() != y.dim()) {
    throw InvalidArgument("transposed matvec dimension mismatch");
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * xr;
  }
}

void add_outer(DenseMatrix& a, const DenseVector& u, const DenseVector& v) {
  if (a.rows() != u.dim() || a.cols() != v.dim()) {
    throw InvalidArgument("outer product dimension mismatch");
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) += ur * v[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

// ---------------------------------------------------------------------------

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t SeededRng::mix(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t part : stream) {
    state = h ^ (part + 0x632BE59BD9B4E019ULL);
    h = splitmix64(state);
  }
  return h;
}

SeededRng SeededRng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  return SeededRng(mix(seed, stream));
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double SeededRng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t SeededRng::uniform_index(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform_index over an empty range");
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double SeededRng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------

void TensorSet::add(std::string name, DenseMatrix tensor) {
  for (const auto& existing : names_) {
    if (existing == name) throw InvalidArgument("duplicate tensor name: " + name);
  }
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

const DenseMatrix& TensorSet::at(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return tensors_[i];
  }
  throw InvalidArgument("unknown tensor: " + std::string(name));
}

DenseMatrix& TensorSet::at(std::string_view name) {
  return const_cast<DenseMatrix&>(static_cast<const TensorSet&>(*this).at(name));
}

bool TensorSet::same_layout(const TensorSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!tensors_[i].same_shape(other.tensors_[i])) return false;
  }
  return true;
}

TensorSet TensorSet::zeros_like() const {
  TensorSet out;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    out.add(names_[i], DenseMatrix(tensors_[i].rows(), tensors_[i].cols()));
  }
  return out;
}

void TensorSet::set_zero() {
  for (auto& t : tensors_) {
    for (double& v : t.values()) v = 0.0;
  }
}

void TensorSet::add_scaled(const TensorSet& other, double scale) {
  if (!same_layout(other)) throw InvalidArgument("tensor set layout mismatch");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto dst = tensors_[i].values();
    auto src = other.tensors_[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void TensorSet::scale(double factor) {
  for (auto& t : tensors_) {
    for (double& v : t.values()) v *= factor;
  }
}

bool TensorSet::all_finite() const {
  for (const auto& t : tensors_) {
    if (!t.all_finite()) return false;
  }
  return true;
}

std::size_t TensorSet::total_entries() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

// ---------------------------------------------------------------------------

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, SeededRng& rng) {
  if (rows == 0 || cols == 0) throw InvalidArgument("glorot_init requires nonzero dimensions");
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = -s + 2.0 * s * rng.uniform01();
  return m;
}

double global_norm(const TensorSet& grads) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) sum += squared_norm(grads[i].values());
  return std::sqrt(sum);
}

ClipResult clip_by_global_norm(GradientSet grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("max_norm must be positive");
  if (!grads.all_finite()) throw NumericError("non-finite gradient entry before clipping");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("gradient norm overflow");
  if (norm <= max_norm) return {std::move(grads), 1.0};
  const double scale = max_norm / norm;
  grads.scale(scale);
  return {std::move(grads), scale};
}

DenseVector dropout_mask(std::size_t dim, double rate, SeededRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  DenseVector mask(dim);
  for (std::size_t i = 0; i < dim; ++i) mask[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
  return mask;
}

void sgd_step(TensorSet& params, const GradientSet& grads, double lr) {
  if (!params.same_layout(grads)) throw InvalidArgument("sgd_step: gradient layout does not mirror parameters");
  if (!(lr >= 0.0)) throw InvalidArgument("sgd_step: learning rate must be nonnegative");
  if (lr == 0.0) return;
  params.add_scaled(grads, -lr);
  if (!params.all_finite()) throw NumericError("sgd_step produced a non-finite parameter");
}

void round_to_float(TensorSet& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double& v : params[i].values()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace pgru
