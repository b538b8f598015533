#include "pgru/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "pgru/error.hpp"
#include "pgru/evaluation.hpp"

namespace pgru {

namespace {

// Stream tags for SeededRng::derive.
constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kShuffleStream = 0x1002;
constexpr std::uint64_t kContrastStream = 0x1003;
constexpr std::uint64_t kDropoutStream = 0x1004;
constexpr std::uint64_t kDevStream = 0x1005;

// Fixed chunking keeps the reduction order independent of the thread count.
constexpr std::size_t kReductionChunks = 8;

struct Accumulator {
  GradientSet grads;
  std::map<std::size_t, DenseVector> embeddings;
  double loss = 0.0;
};

bool any_nonzero(const DenseVector& v) {
  return std::any_of(v.values().begin(), v.values().end(), [](double x) { return x != 0.0; });
}

void add_into(DenseVector& dst, const DenseVector& src) {
  for (std::size_t i = 0; i < dst.dim(); ++i) dst[i] += src[i];
}

void accumulate_example(const GruParams& params, const TrainingExample& ex,
                        const EmbeddingTable& table, const TrainConfig& config, SeededRng* rng,
                        bool want_gradients, Accumulator& acc) {
  const bool trainable_embeddings = !config.freeze_embeddings;
  auto encode = [&](const TokenSeq& tokens) {
    const auto vecs = table.vectors_for(tokens);
    return gru_encode(params, vecs, rng, config.dropout_rate);
  };

  GruEncodeResult e1 = encode(ex.p1);
  GruEncodeResult e2 = encode(ex.p2);
  std::vector<GruEncodeResult> ec;
  std::vector<DenseVector> cvecs;
  ec.reserve(ex.contrasts.size());
  cvecs.reserve(ex.contrasts.size());
  for (const auto& c : ex.contrasts) {
    ec.push_back(encode(c));
    cvecs.push_back(ec.back().embedding.vector);
  }
  const DenseVector& v1 = e1.embedding.vector;
  const DenseVector& v2 = e2.embedding.vector;

  acc.loss += contrastive_loss(v1, v2, cvecs, config.margin).total;
  if (config.symmetric_loss) acc.loss += contrastive_loss(v2, v1, cvecs, config.margin).total;
  if (!want_gradients) return;

  LossGradients g = contrastive_loss_backward(v1, v2, cvecs, config.margin);
  if (config.symmetric_loss) {
    LossGradients mirrored = contrastive_loss_backward(v2, v1, cvecs, config.margin);
    add_into(g.p1, mirrored.p2);
    add_into(g.p2, mirrored.p1);
    for (std::size_t i = 0; i < cvecs.size(); ++i) add_into(g.contrasts[i], mirrored.contrasts[i]);
  }

  std::vector<DenseVector> input_grads;
  auto backprop = [&](const GruEncodeResult& enc, const TokenSeq& tokens, const DenseVector& grad) {
    if (!any_nonzero(grad)) return;
    gru_backward_accumulate(params, enc.caches, grad, acc.grads,
                            trainable_embeddings ? &input_grads : nullptr);
    if (!trainable_embeddings) return;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::size_t row = *table.index_of(tokens[t]);
      auto [it, inserted] = acc.embeddings.try_emplace(row, table.dim());
      add_into(it->second, input_grads[t]);
    }
  };
  backprop(e1, ex.p1, g.p1);
  backprop(e2, ex.p2, g.p2);
  for (std::size_t i = 0; i < ec.size(); ++i) backprop(ec[i], ex.contrasts[i], g.contrasts[i]);
}

BatchGradients run_batch(const GruParams& params, std::span<const TrainingExample> batch,
                         const EmbeddingTable& table, const TrainConfig& config,
                         const std::uint64_t* dropout_seed, bool want_gradients) {
  if (batch.empty()) throw InvalidArgument("training batch is empty");
  const std::size_t n = batch.size();
  const std::size_t n_chunks = std::min(n, kReductionChunks);
  std::vector<Accumulator> chunks(n_chunks);

  auto run_chunk = [&](std::size_t c) {
    Accumulator& acc = chunks[c];
    if (want_gradients) acc.grads = params.tensors().zeros_like();
    const std::size_t begin = c * n / n_chunks;
    const std::size_t end = (c + 1) * n / n_chunks;
    for (std::size_t i = begin; i < end; ++i) {
      if (dropout_seed != nullptr) {
        SeededRng rng = SeededRng::derive(*dropout_seed, {i});
        accumulate_example(params, batch[i], table, config, &rng, want_gradients, acc);
      } else {
        accumulate_example(params, batch[i], table, config, nullptr, want_gradients, acc);
      }
    }
  };

  const std::size_t workers = std::min(config.threads, n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BatchGradients out;
  double loss_sum = 0.0;
  if (want_gradients) out.params = params.tensors().zeros_like();
  for (auto& acc : chunks) {
    loss_sum += acc.loss;
    if (!want_gradients) continue;
    out.params.add_scaled(acc.grads, 1.0);
    for (auto& [row, g] : acc.embeddings) {
      auto [it, inserted] = out.embeddings.try_emplace(row, table.dim());
      add_into(it->second, g);
    }
  }
  out.loss = loss_sum / static_cast<double>(n);
  if (want_gradients) {
    const double inv = 1.0 / static_cast<double>(n);
    out.params.scale(inv);
    for (auto& [row, g] : out.embeddings) {
      for (std::size_t i = 0; i < g.dim(); ++i) g[i] *= inv;
    }
  }
  return out;
}

std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

bool rows_differ(std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (double_bits(a[i]) != double_bits(b[i])) return true;
  }
  return false;
}

std::vector<std::pair<std::string, DenseVector>> embedding_delta(const EmbeddingTable& original,
                                                                 const EmbeddingTable& tuned) {
  std::vector<std::pair<std::string, DenseVector>> delta;
  for (std::size_t i = 0; i < tuned.size(); ++i) {
    if (rows_differ(original.row(i), tuned.row(i))) delta.emplace_back(tuned.word(i), tuned.vector(i));
  }
  std::sort(delta.begin(), delta.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return delta;
}

void check_in_vocab(const TokenSeq& tokens, const EmbeddingTable& table) {
  for (const auto& t : tokens) {
    if (!table.contains(t)) throw InvalidArgument("training phrase word not in embedding table: " + t);
  }
}

}  // namespace

BatchGradients compute_batch_gradients(const GruParams& params,
                                       std::span<const TrainingExample> batch,
                                       const EmbeddingTable& table, const TrainConfig& config,
                                       const std::uint64_t* dropout_seed) {
  return run_batch(params, batch, table, config, dropout_seed, true);
}

double evaluate_batch_objective(const GruParams& params, std::span<const TrainingExample> batch,
                                const EmbeddingTable& table, const TrainConfig& config) {
  return run_batch(params, batch, table, config, nullptr, false).loss;
}

namespace {

// `tuned` aliases `table` when word vectors are trainable and is null otherwise.
StepResult apply_step(GruParams& params, std::span<const TrainingExample> batch,
                      const EmbeddingTable& table, EmbeddingTable* tuned,
                      const TrainConfig& config, SeededRng& rng) {
  const std::uint64_t step_seed = rng.next_u64();
  BatchGradients bg = compute_batch_gradients(params, batch, table, config,
                                              config.dropout_rate > 0.0 ? &step_seed : nullptr);
  if (!std::isfinite(bg.loss)) throw NumericError("non-finite training loss");

  // Parameter and word-vector gradients share one global norm.
  GradientSet joint = std::move(bg.params);
  const std::size_t n_param_tensors = joint.size();
  for (auto& [row, g] : bg.embeddings) {
    joint.add("emb:" + table.word(row), DenseMatrix(1, g.dim(), g.values()));
  }

  StepResult result;
  result.loss = bg.loss;
  result.pre_clip_norm = global_norm(joint);
  ClipResult clipped = clip_by_global_norm(std::move(joint), config.clip_norm);
  result.clip_scale = clipped.applied_scale;
  result.post_clip_norm = global_norm(clipped.grads);

  GradientSet param_grads;
  for (std::size_t i = 0; i < n_param_tensors; ++i) {
    param_grads.add(clipped.grads.name(i), clipped.grads[i]);
  }
  sgd_step(params.tensors(), param_grads, config.lr);
  if (config.precision == Precision::f32) round_to_float(params.tensors());

  if (config.lr != 0.0 && tuned != nullptr) {
    std::size_t i = n_param_tensors;
    for (const auto& [row, g] : bg.embeddings) {
      auto dst = tuned->row(row);
      auto src = clipped.grads[i++].values();
      for (std::size_t j = 0; j < dst.size(); ++j) {
        dst[j] -= config.lr * src[j];
        if (config.precision == Precision::f32) dst[j] = static_cast<double>(static_cast<float>(dst[j]));
        if (!std::isfinite(dst[j])) throw NumericError("non-finite word vector after update");
      }
    }
  }
  return result;
}

}  // namespace

StepResult train_step(GruParams& params, std::span<const TrainingExample> batch,
                      EmbeddingTable& table, const TrainConfig& config, SeededRng& rng) {
  return apply_step(params, batch, table, config.freeze_embeddings ? nullptr : &table, config, rng);
}

TrainingExample make_example(const ParaphrasePair& pair, std::span<const std::string> pool,
                             std::size_t k, std::span<const std::string> fixed_contrasts,
                             SeededRng& rng) {
  TrainingExample ex;
  ex.p1 = tokenize(pair.p1);
  ex.p2 = tokenize(pair.p2);
  const std::size_t n_fixed = std::min(k, fixed_contrasts.size());
  std::vector<std::string> exclude{pair.p1, pair.p2};
  for (std::size_t i = 0; i < n_fixed; ++i) {
    ex.contrasts.push_back(tokenize(fixed_contrasts[i]));
    exclude.push_back(fixed_contrasts[i]);
  }
  if (n_fixed < k) {
    for (std::size_t idx : sample_contrasts(pool, k - n_fixed, exclude, rng)) {
      ex.contrasts.push_back(tokenize(pool[idx]));
    }
  }
  return ex;
}

EmbeddingTable apply_embedding_delta(const EmbeddingTable& table, const Checkpoint& ckpt) {
  EmbeddingTable out = table;
  for (const auto& [word, vec] : ckpt.embedding_delta) {
    if (vec.dim() != out.dim()) throw ConfigError("embedding delta dimension mismatch");
    if (auto idx = out.index_of(word)) {
      auto row = out.row(*idx);
      std::copy(vec.values().begin(), vec.values().end(), row.begin());
    } else {
      out.add(word, vec);
    }
  }
  return out;
}

TrainResult train(const TrainConfig& config, std::span<const ParaphrasePair> train_pairs,
                  std::span<const ParaphrasePair> dev_pairs, const EmbeddingTable& table,
                  const TrainOptions& options) {
  validate(config);
  if (train_pairs.empty()) throw InvalidArgument("training set is empty");
  if (table.dim() != config.embed_dim) {
    throw ConfigError("embedding table has dim " + std::to_string(table.dim()) +
                      " but config embed_dim is " + std::to_string(config.embed_dim));
  }
  if (!options.fixed_contrasts.empty() && options.fixed_contrasts.size() != train_pairs.size()) {
    throw InvalidArgument("fixed contrasts must align with the training pairs");
  }

  std::vector<ParaphrasePair> pairs(train_pairs.begin(), train_pairs.end());
  std::vector<std::vector<std::string>> fixed = options.fixed_contrasts;
  if (fixed.empty()) fixed.resize(pairs.size());
  if (config.mirror_pairs) {
    const std::size_t n = pairs.size();
    for (std::size_t i = 0; i < n; ++i) {
      pairs.push_back({pairs[i].p2, pairs[i].p1});
      fixed.push_back(fixed[i]);
    }
  }
  for (const auto& p : pairs) {
    check_in_vocab(tokenize(p.p1), table);
    check_in_vocab(tokenize(p.p2), table);
  }
  const std::vector<std::string> pool = phrase_pool(pairs);

  std::vector<std::string> dev_pool;
  const std::uint64_t dev_seed = SeededRng::mix(config.seed, {kDevStream});
  if (!options.dev_metric) {
    if (dev_pairs.empty()) throw InvalidArgument("dev set is empty");
    dev_pool = phrase_pool(dev_pairs);
    if (dev_pool.size() <= config.dev_eval_k + 2) {
      throw ConfigError("dev set has " + std::to_string(dev_pool.size()) +
                        " distinct phrases, too few for dev_eval_k=" +
                        std::to_string(config.dev_eval_k));
    }
  }

  SeededRng init_rng = SeededRng::derive(config.seed, {kInitStream});
  GruParams params = GruParams::glorot(config.embed_dim, config.hidden_dim, config.use_bias, init_rng);
  if (config.precision == Precision::f32) round_to_float(params.tensors());

  // Only materialize a mutable copy when word vectors are trained.
  EmbeddingTable tuned;
  if (!config.freeze_embeddings) tuned = table;
  const EmbeddingTable& working = config.freeze_embeddings ? table : tuned;
  EmbeddingTable* trainable = config.freeze_embeddings ? nullptr : &tuned;

  auto dev_metric = [&]() {
    if (options.dev_metric) return options.dev_metric(params, working);
    GruEncoder encoder(params, working);
    EvalOptions eval;
    eval.similarity = config.eval_similarity;
    return ranking_accuracy(encoder, dev_pairs, dev_pool, config.dev_eval_k, dev_seed, eval).accuracy;
  };

  TrainResult result;
  bool have_best = false;
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng shuffle_rng = SeededRng::derive(config.seed, {kShuffleStream, epoch});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }

    double loss_sum = 0.0;
    std::size_t steps = 0;
    std::size_t clipped_steps = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<TrainingExample> batch;
      batch.reserve(end - start);
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t idx = order[j];
        SeededRng rng = SeededRng::derive(config.seed, {kContrastStream, epoch, idx});
        batch.push_back(make_example(pairs[idx], pool, config.k_contrasts, fixed[idx], rng));
      }
      SeededRng step_rng = SeededRng::derive(config.seed, {kDropoutStream, epoch, b});
      StepResult step;
      try {
        // In-place update of the one shared parameter object.
        step = apply_step(params, batch, working, trainable, config, step_rng);
      } catch (const NumericError& e) {
        throw NumericError("numeric failure at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + ": " + e.what());
      }
      loss_sum += step.loss * static_cast<double>(batch.size());
      ++steps;
      if (step.clip_scale < 1.0) ++clipped_steps;
      if (options.on_step) options.on_step({epoch, b, step});
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(pairs.size());
    log.clip_rate = static_cast<double>(clipped_steps) / static_cast<double>(steps);
    log.dev_accuracy = dev_metric();
    if (options.record_wall_time) {
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.logs.push_back(log);
    if (options.on_epoch) options.on_epoch(log);

    if (!have_best || log.dev_accuracy > result.checkpoint.best_dev_metric) {
      have_best = true;
      stale_epochs = 0;
      Checkpoint& best = result.checkpoint;
      best.config = config;
      best.params = params;
      best.best_dev_metric = log.dev_accuracy;
      best.epoch = static_cast<std::uint32_t>(epoch);
      best.run_seed = config.seed;
      best.embedding_delta.clear();
      if (!config.freeze_embeddings) best.embedding_delta = embedding_delta(table, working);
    } else if (++stale_epochs >= config.early_stop_patience) {
      break;
    }
  }
  if (!have_best) {
    // max_epochs == 0: the untrained model is the result.
    result.checkpoint.config = config;
    result.checkpoint.params = params;
    result.checkpoint.run_seed = config.seed;
  }
  return result;
}

std::string metrics_tsv(std::span<const EpochLog> logs) {
  std::string out = "epoch\ttrain_loss\tdev_acc\tseconds\tclip_rate\n";
  for (const auto& l : logs) {
    out += std::to_string(l.epoch) + '\t' + format_double(l.train_loss) + '\t' +
           format_double(l.dev_accuracy) + '\t' + format_double(l.seconds) + '\t' +
           format_double(l.clip_rate) + '\n';
  }
  return out;
}

void write_metrics_tsv(const std::filesystem::path& path, std::span<const EpochLog> logs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write metrics file " + path.string());
  out << metrics_tsv(logs);
}

}  // namespace pgru
