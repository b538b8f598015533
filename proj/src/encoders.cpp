#include "pgru/encoders.hpp"

#include <cmath>
#include <string>

#include "pgru/error.hpp"

namespace pgru {

namespace {

constexpr const char* kTensorNames[] = {"W", "U", "W_z", "U_z", "W_r", "U_r", "b_h", "b_z", "b_r"};

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void add_bias(const DenseMatrix& bias, DenseVector& pre) {
  for (std::size_t j = 0; j < pre.dim(); ++j) pre[j] += bias(j, 0);
}

// Column vector view of a bias gradient.
void add_to_bias(DenseMatrix& bias_grad, const DenseVector& delta) {
  for (std::size_t j = 0; j < delta.dim(); ++j) bias_grad(j, 0) += delta[j];
}

}  // namespace

GruParams GruParams::zeros(std::size_t input_dim, std::size_t hidden_dim, bool use_bias) {
  if (input_dim == 0 || hidden_dim == 0) throw InvalidArgument("GRU dimensions must be nonzero");
  GruParams p;
  p.input_dim_ = input_dim;
  p.hidden_dim_ = hidden_dim;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t cols = (i % 2 == 0) ? input_dim : hidden_dim;
    p.tensors_.add(kTensorNames[i], DenseMatrix(hidden_dim, cols));
  }
  if (use_bias) {
    for (std::size_t i = 6; i < 9; ++i) p.tensors_.add(kTensorNames[i], DenseMatrix(hidden_dim, 1));
  }
  return p;
}

GruParams GruParams::glorot(std::size_t input_dim, std::size_t hidden_dim, bool use_bias,
                            SeededRng& rng) {
  GruParams p = zeros(input_dim, hidden_dim, use_bias);
  for (std::size_t i = 0; i < 6; ++i) {
    p.tensors_[i] = glorot_init(p.tensors_[i].rows(), p.tensors_[i].cols(), rng);
  }
  return p;
}

GruParams GruParams::from_tensors(TensorSet tensors) {
  if (tensors.size() != 6 && tensors.size() != 9) {
    throw FormatError("GRU parameter set must hold 6 or 9 tensors, got " +
                      std::to_string(tensors.size()));
  }
  const std::size_t hidden = tensors[kW].rows();
  const std::size_t input = tensors[kW].cols();
  GruParams reference = zeros(input == 0 ? 1 : input, hidden == 0 ? 1 : hidden, tensors.size() == 9);
  if (!reference.tensors_.same_layout(tensors)) {
    throw FormatError("GRU parameter tensors have inconsistent names or shapes");
  }
  reference.tensors_ = std::move(tensors);
  return reference;
}

GruStepResult gru_cell_forward(const GruParams& params, const DenseVector& x,
                               const DenseVector& h_prev,
                               const std::optional<DenseVector>& dropout_mask) {
  const std::size_t n_in = params.input_dim();
  const std::size_t n_h = params.hidden_dim();
  if (x.dim() != n_in) {
    throw InvalidArgument("GRU input has " + std::to_string(x.dim()) + " entries, expected " +
                          std::to_string(n_in));
  }
  if (h_prev.dim() != n_h) {
    throw InvalidArgument("GRU previous state has " + std::to_string(h_prev.dim()) +
                          " entries, expected " + std::to_string(n_h));
  }
  if (dropout_mask && dropout_mask->dim() != n_in) {
    throw InvalidArgument("dropout mask dimension does not match GRU input");
  }

  GruStepCache c;
  c.x = x;
  c.x_hat = x;
  if (dropout_mask) {
    for (std::size_t i = 0; i < n_in; ++i) c.x_hat[i] *= (*dropout_mask)[i];
    c.mask = dropout_mask;
  }
  c.h_prev = h_prev;

  const auto& t = params.tensors();
  DenseVector a_z = matvec(params.W_z(), c.x_hat);
  matvec_accumulate(params.U_z(), h_prev, a_z);
  DenseVector a_r = matvec(params.W_r(), c.x_hat);
  matvec_accumulate(params.U_r(), h_prev, a_r);
  if (params.has_bias()) {
    add_bias(t[GruParams::kBz], a_z);
    add_bias(t[GruParams::kBr], a_r);
  }

  c.z = DenseVector(n_h);
  c.r = DenseVector(n_h);
  DenseVector gated(n_h);
  for (std::size_t j = 0; j < n_h; ++j) {
    c.z[j] = sigmoid(a_z[j]);
    c.r[j] = sigmoid(a_r[j]);
    gated[j] = c.r[j] * h_prev[j];
  }

  DenseVector a_h = matvec(params.W(), c.x_hat);
  matvec_accumulate(params.U(), gated, a_h);
  if (params.has_bias()) add_bias(t[GruParams::kBh], a_h);

  c.h_tilde = DenseVector(n_h);
  c.h = DenseVector(n_h);
  for (std::size_t j = 0; j < n_h; ++j) {
    c.h_tilde[j] = std::tanh(a_h[j]);
    c.h[j] = (1.0 - c.z[j]) * h_prev[j] + c.z[j] * c.h_tilde[j];
  }
  DenseVector h = c.h;
  return {std::move(h), std::move(c)};
}

GruEncodeResult gru_encode(const GruParams& params, std::span<const DenseVector> tokens,
                           SeededRng* dropout_rng, double dropout_rate) {
  if (tokens.empty()) throw InvalidArgument("cannot encode an empty token sequence");
  GruEncodeResult result;
  result.caches.reserve(tokens.size());
  DenseVector h(params.hidden_dim());
  for (const auto& x : tokens) {
    std::optional<DenseVector> mask;
    if (dropout_rng != nullptr) mask = dropout_mask(params.input_dim(), dropout_rate, *dropout_rng);
    auto step = gru_cell_forward(params, x, h, mask);
    h = std::move(step.h);
    result.caches.push_back(std::move(step.cache));
  }
  result.embedding = PhraseEmbedding{std::move(h), tokens.size()};
  return result;
}

void gru_backward_accumulate(const GruParams& params, std::span<const GruStepCache> caches,
                             const DenseVector& grad_h_last, GradientSet& grads,
                             std::vector<DenseVector>* input_grads) {
  const std::size_t n_in = params.input_dim();
  const std::size_t n_h = params.hidden_dim();
  if (caches.empty()) throw InvalidArgument("gru_backward needs at least one cached step");
  if (grad_h_last.dim() != n_h) throw InvalidArgument("gradient on h_T has the wrong dimension");
  if (!grads.same_layout(params.tensors())) {
    throw InvalidArgument("gradient set does not mirror the GRU parameters");
  }
  for (const auto& c : caches) {
    if (c.x.dim() != n_in || c.x_hat.dim() != n_in || c.h_prev.dim() != n_h || c.z.dim() != n_h ||
        c.r.dim() != n_h || c.h_tilde.dim() != n_h || c.h.dim() != n_h) {
      throw InvalidArgument("GRU step cache is inconsistent with the parameters");
    }
  }
  if (input_grads != nullptr) input_grads->assign(caches.size(), DenseVector(n_in));

  const bool bias = params.has_bias();
  DenseVector dh = grad_h_last;
  for (std::size_t step = caches.size(); step-- > 0;) {
    const GruStepCache& c = caches[step];

    DenseVector d_ah(n_h), d_az(n_h), gated(n_h), dh_prev(n_h);
    for (std::size_t j = 0; j < n_h; ++j) {
      const double dz = dh[j] * (c.h_tilde[j] - c.h_prev[j]);
      const double dh_tilde = dh[j] * c.z[j];
      d_ah[j] = dh_tilde * (1.0 - c.h_tilde[j] * c.h_tilde[j]);
      d_az[j] = dz * c.z[j] * (1.0 - c.z[j]);
      gated[j] = c.r[j] * c.h_prev[j];
      dh_prev[j] = dh[j] * (1.0 - c.z[j]);
    }

    // Candidate path through U (r * h_prev).
    DenseVector d_gated(n_h);
    matvec_transposed_accumulate(params.U(), d_ah, d_gated);
    DenseVector d_ar(n_h);
    for (std::size_t j = 0; j < n_h; ++j) {
      dh_prev[j] += d_gated[j] * c.r[j];
      d_ar[j] = d_gated[j] * c.h_prev[j] * c.r[j] * (1.0 - c.r[j]);
    }

    add_outer(grads[GruParams::kW], d_ah, c.x_hat);
    add_outer(grads[GruParams::kU], d_ah, gated);
    add_outer(grads[GruParams::kWz], d_az, c.x_hat);
    add_outer(grads[GruParams::kUz], d_az, c.h_prev);
    add_outer(grads[GruParams::kWr], d_ar, c.x_hat);
    add_outer(grads[GruParams::kUr], d_ar, c.h_prev);
    if (bias) {
      add_to_bias(grads[GruParams::kBh], d_ah);
      add_to_bias(grads[GruParams::kBz], d_az);
      add_to_bias(grads[GruParams::kBr], d_ar);
    }

    matvec_transposed_accumulate(params.U_z(), d_az, dh_prev);
    matvec_transposed_accumulate(params.U_r(), d_ar, dh_prev);

    if (input_grads != nullptr) {
      DenseVector& dx = (*input_grads)[step];
      matvec_transposed_accumulate(params.W(), d_ah, dx);
      matvec_transposed_accumulate(params.W_z(), d_az, dx);
      matvec_transposed_accumulate(params.W_r(), d_ar, dx);
      if (c.mask) {
        for (std::size_t i = 0; i < n_in; ++i) dx[i] *= (*c.mask)[i];
      }
    }
    dh = std::move(dh_prev);
  }
}

GruBackwardResult gru_backward(const GruParams& params, std::span<const GruStepCache> caches,
                               const DenseVector& grad_h_last) {
  GruBackwardResult result;
  result.param_grads = params.tensors().zeros_like();
  gru_backward_accumulate(params, caches, grad_h_last, result.param_grads, &result.input_grads);
  return result;
}

PhraseEmbedding sum_encode(std::span<const DenseVector> tokens) {
  if (tokens.empty()) throw InvalidArgument("cannot compose an empty token sequence");
  DenseVector sum(tokens.front().dim());
  for (const auto& t : tokens) {
    if (t.dim() != sum.dim()) throw InvalidArgument("token vectors have mixed dimensions");
    for (std::size_t i = 0; i < sum.dim(); ++i) sum[i] += t[i];
  }
  return {std::move(sum), tokens.size()};
}

PhraseEmbedding avg_encode(std::span<const DenseVector> tokens) {
  PhraseEmbedding e = sum_encode(tokens);
  const double n = static_cast<double>(tokens.size());
  for (std::size_t i = 0; i < e.vector.dim(); ++i) e.vector[i] /= n;
  return e;
}

}  // namespace pgru
