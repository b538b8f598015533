#include "pgru/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/encoders.hpp"
#include "pgru/objective.hpp"
#include "pgru/training.hpp"

namespace pgru {

namespace {

constexpr double kKinkGap = 1e-3;

class WorstTracker {
 public:
  WorstTracker(std::string name, double threshold) {
    c_.name = std::move(name);
    c_.threshold = threshold;
  }
  void record(double analytic, double numeric, const std::function<std::string()>& where) {
    const double err = gradient_relative_error(analytic, numeric);
    ++c_.coordinates_checked;
    if (err > c_.worst_relative_error || c_.worst_coordinate.empty()) {
      c_.worst_relative_error = err;
      c_.worst_coordinate = where();
    }
  }
  GradcheckComponent result() const { return c_; }

 private:
  GradcheckComponent c_;
};

std::size_t draw_size(SeededRng& rng, std::size_t upper) {
  return 1 + rng.uniform_index(std::max<std::size_t>(upper, 1));
}

DenseVector normal_vector(std::size_t dim, SeededRng& rng, double scale = 1.0) {
  DenseVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = scale * rng.normal();
  return v;
}

double central_difference(double& slot, double eps, const std::function<double()>& f) {
  const double saved = slot;
  slot = saved + eps;
  const double plus = f();
  slot = saved - eps;
  const double minus = f();
  slot = saved;
  return (plus - minus) / (2.0 * eps);
}

std::string coordinate(std::size_t instance, const std::string& tensor, std::size_t r,
                       std::size_t c) {
  return "instance " + std::to_string(instance) + ", " + tensor + "[" + std::to_string(r) + "," +
         std::to_string(c) + "]";
}

void randomize_biases(GruParams& params, SeededRng& rng) {
  if (!params.has_bias()) return;
  for (std::size_t t : {GruParams::kBh, GruParams::kBz, GruParams::kBr}) {
    for (double& v : params.tensors()[t].values()) v = 0.5 * rng.normal();
  }
}

// Smallest |margin - p1.p2 + p1.c| over a batch in inference mode.
double min_hinge_gap(const GruParams& params, std::span<const TrainingExample> batch,
                     const EmbeddingTable& table, double margin) {
  auto enc = [&](const TokenSeq& t) {
    const auto vecs = table.vectors_for(t);
    return gru_encode(params, vecs).embedding.vector;
  };
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& ex : batch) {
    const DenseVector p1 = enc(ex.p1);
    const double pos = dot_similarity(p1, enc(ex.p2));
    for (const auto& c : ex.contrasts) {
      gap = std::min(gap, std::abs(margin - pos + dot_similarity(p1, enc(c))));
    }
  }
  return gap;
}

struct EndToEndSetup {
  TrainConfig config;
  GruParams params;
  EmbeddingTable table;
  std::vector<TrainingExample> batch;
};

// A small model whose hinge terms all sit well away from their kinks.
EndToEndSetup make_end_to_end(const GradcheckOptions& options, std::uint64_t stream, bool bias) {
  SeededRng rng = SeededRng::derive(options.seed, {0xE3, stream});
  EndToEndSetup s;
  const std::size_t dim = std::max<std::size_t>(options.dims, 1);
  s.config.embed_dim = dim;
  s.config.hidden_dim = dim;
  s.config.dropout_rate = 0.0;
  s.config.freeze_embeddings = false;
  s.config.use_bias = bias;
  s.config.k_contrasts = 3;
  s.config.threads = 1;

  s.table = EmbeddingTable(dim, true);
  const std::size_t vocab = 10;
  for (std::size_t w = 0; w < vocab; ++w) s.table.add("w" + std::to_string(w), normal_vector(dim, rng));
  auto phrase = [&] {
    TokenSeq t;
    const std::size_t n = draw_size(rng, options.len);
    for (std::size_t i = 0; i < n; ++i) t.push_back(s.table.word(rng.uniform_index(vocab)));
    return t;
  };
  for (std::size_t e = 0; e < 3; ++e) {
    TrainingExample ex{phrase(), phrase(), {}};
    for (std::size_t c = 0; c < s.config.k_contrasts; ++c) ex.contrasts.push_back(phrase());
    s.batch.push_back(std::move(ex));
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    s.params = GruParams::glorot(dim, dim, bias, rng);
    randomize_biases(s.params, rng);
    if (min_hinge_gap(s.params, s.batch, s.table, s.config.margin) > kKinkGap) break;
  }
  return s;
}

// Finite-difference gradient of the mean batch loss w.r.t. every parameter.
TensorSet numeric_param_gradient(EndToEndSetup& s, double eps) {
  TensorSet grads = s.params.tensors().zeros_like();
  auto f = [&] { return evaluate_batch_objective(s.params, s.batch, s.table, s.config); };
  for (std::size_t t = 0; t < grads.size(); ++t) {
    auto values = s.params.tensors()[t].values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      grads[t].values()[j] = central_difference(values[j], eps, f);
    }
  }
  return grads;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / denom;
}

bool GradcheckReport::passed() const {
  return std::all_of(components.begin(), components.end(),
                     [](const GradcheckComponent& c) { return c.passed(); });
}

GradcheckComponent check_encoder_gradients(const GradcheckOptions& options) {
  WorstTracker worst("encoder", 1e-4);
  const double eps = options.epsilon;
  for (std::size_t inst = 0; inst < options.instances; ++inst) {
    SeededRng rng = SeededRng::derive(options.seed, {0xE1, inst});
    const std::size_t in = draw_size(rng, options.dims);
    const std::size_t hid = draw_size(rng, options.dims);
    const std::size_t len = draw_size(rng, options.len);
    const bool bias = inst % 2 == 1;
    GruParams params = GruParams::glorot(in, hid, bias, rng);
    randomize_biases(params, rng);
    std::vector<DenseVector> xs;
    for (std::size_t t = 0; t < len; ++t) xs.push_back(normal_vector(in, rng));
    const DenseVector readout = normal_vector(hid, rng);

    auto f = [&] { return dot_similarity(readout, gru_encode(params, xs).embedding.vector); };
    const auto forward = gru_encode(params, xs);
    GruBackwardResult analytic = gru_backward(params, forward.caches, readout);
#ifdef PGRU_TEST_CORRUPT_GRADIENT
    analytic.param_grads[GruParams::kW].values()[0] += 1e-2;
#endif

    TensorSet& tensors = params.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      const std::size_t cols = tensors[t].cols();
      auto values = tensors[t].values();
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double numeric = central_difference(values[j], eps, f);
        worst.record(analytic.param_grads[t].values()[j], numeric,
                     [&] { return coordinate(inst, tensors.name(t), j / cols, j % cols); });
      }
    }
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t i = 0; i < in; ++i) {
        const double numeric = central_difference(xs[t][i], eps, f);
        worst.record(analytic.input_grads[t][i], numeric,
                     [&] { return coordinate(inst, "x", t, i); });
      }
    }
  }
  return worst.result();
}

GradcheckComponent check_loss_gradients(const GradcheckOptions& options) {
  WorstTracker worst("loss", 1e-6);
  const double eps = options.epsilon;
  const double margin = 1.0;
  std::size_t checked = 0;
  for (std::uint64_t attempt = 0; checked < options.instances && attempt < 100 * options.instances;
       ++attempt) {
    SeededRng rng = SeededRng::derive(options.seed, {0xE2, attempt});
    const std::size_t dim = draw_size(rng, options.dims);
    const std::size_t k = draw_size(rng, 5);
    DenseVector p1 = normal_vector(dim, rng, 0.7);
    DenseVector p2 = normal_vector(dim, rng, 0.7);
    std::vector<DenseVector> cs;
    for (std::size_t i = 0; i < k; ++i) cs.push_back(normal_vector(dim, rng, 0.7));

    double gap = std::numeric_limits<double>::infinity();
    for (const auto& c : cs) gap = std::min(gap, std::abs(margin - dot(p1.span(), p2.span()) + dot(p1.span(), c.span())));
    if (gap < kKinkGap) continue;
    const std::size_t inst = checked++;

    const LossGradients g = contrastive_loss_backward(p1, p2, cs, margin);
    auto f = [&] { return contrastive_loss(p1, p2, cs, margin).total; };
    for (std::size_t i = 0; i < dim; ++i) {
      worst.record(g.p1[i], central_difference(p1[i], eps, f),
                   [&] { return coordinate(inst, "p1", 0, i); });
      worst.record(g.p2[i], central_difference(p2[i], eps, f),
                   [&] { return coordinate(inst, "p2", 0, i); });
      for (std::size_t c = 0; c < k; ++c) {
        worst.record(g.contrasts[c][i], central_difference(cs[c][i], eps, f),
                     [&] { return coordinate(inst, "c", c, i); });
      }
    }
  }
  return worst.result();
}

GradcheckComponent check_end_to_end_gradients(const GradcheckOptions& options) {
  WorstTracker worst("end_to_end", 1e-4);
  const double eps = options.epsilon;
  for (std::size_t inst = 0; inst < 2; ++inst) {
    EndToEndSetup s = make_end_to_end(options, inst, inst == 1);
    const BatchGradients analytic =
        compute_batch_gradients(s.params, s.batch, s.table, s.config, nullptr);
    const TensorSet numeric = numeric_param_gradient(s, eps);
    for (std::size_t t = 0; t < numeric.size(); ++t) {
      const std::size_t cols = numeric[t].cols();
      for (std::size_t j = 0; j < numeric[t].size(); ++j) {
        worst.record(analytic.params[t].values()[j], numeric[t].values()[j],
                     [&] { return coordinate(inst, numeric.name(t), j / cols, j % cols); });
      }
    }
    auto f = [&] { return evaluate_batch_objective(s.params, s.batch, s.table, s.config); };
    for (std::size_t w = 0; w < s.table.size(); ++w) {
      auto row = s.table.row(w);
      const auto it = analytic.embeddings.find(w);
      for (std::size_t i = 0; i < row.size(); ++i) {
        const double a = it == analytic.embeddings.end() ? 0.0 : it->second[i];
        worst.record(a, central_difference(row[i], eps, f),
                     [&] { return coordinate(inst, "emb:" + s.table.word(w), 0, i); });
      }
    }
  }
  return worst.result();
}

GradcheckComponent check_step_delta(const GradcheckOptions& options) {
  WorstTracker worst("train_step", 1e-4);
  for (std::size_t inst = 0; inst < 2; ++inst) {
    EndToEndSetup s = make_end_to_end(options, 0x100 + inst, inst == 1);
    const BatchGradients analytic =
        compute_batch_gradients(s.params, s.batch, s.table, s.config, nullptr);
    const TensorSet numeric = numeric_param_gradient(s, options.epsilon);

    double norm2 = 0.0;
    for (std::size_t t = 0; t < analytic.params.size(); ++t) norm2 += squared_norm(analytic.params[t].values());
    for (const auto& [row, g] : analytic.embeddings) norm2 += squared_norm(g.span());
    const double norm = std::sqrt(norm2);
    // Force the clip to engage so the scale is part of what gets checked.
    s.config.clip_norm = norm > 0.0 ? 0.5 * norm : 1.0;
    const double scale = norm > 0.0 ? s.config.clip_norm / norm : 1.0;
    const double lr = s.config.lr;

    GruParams after = s.params;
    EmbeddingTable table_after = s.table;
    SeededRng rng(options.seed);
    train_step(after, s.batch, table_after, s.config, rng);

    for (std::size_t t = 0; t < numeric.size(); ++t) {
      const std::size_t cols = numeric[t].cols();
      for (std::size_t j = 0; j < numeric[t].size(); ++j) {
        const double delta = after.tensors()[t].values()[j] - s.params.tensors()[t].values()[j];
        auto where = [&] { return coordinate(inst, s.params.tensors().name(t), j / cols, j % cols); };
        worst.record(delta, -lr * scale * analytic.params[t].values()[j], where);
        worst.record(delta, -lr * scale * numeric[t].values()[j], where);
      }
    }
    for (std::size_t w = 0; w < s.table.size(); ++w) {
      const auto it = analytic.embeddings.find(w);
      for (std::size_t i = 0; i < s.table.dim(); ++i) {
        const double delta = table_after.row(w)[i] - s.table.row(w)[i];
        const double expected = it == analytic.embeddings.end() ? 0.0 : -lr * scale * it->second[i];
        worst.record(delta, expected, [&] { return coordinate(inst, "emb:" + s.table.word(w), 0, i); });
      }
    }
  }
  return worst.result();
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  report.components.push_back(check_encoder_gradients(options));
  report.components.push_back(check_loss_gradients(options));
  report.components.push_back(check_end_to_end_gradients(options));
  report.components.push_back(check_step_delta(options));
  return report;
}

}  // namespace pgru
