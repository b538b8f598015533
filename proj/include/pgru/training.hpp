#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pgru/checkpoint.hpp"
#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/encoders.hpp"
#include "pgru/objective.hpp"

namespace pgru {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double seconds = 0.0;
  double clip_rate = 0.0;
};

struct BatchGradients {
  double loss = 0.0;  // mean per-example loss
  GradientSet params;
  // Word-row index -> dL/d(word vector); filled only when embeddings are trainable.
  std::map<std::size_t, DenseVector> embeddings;
};

/// Mean contrastive loss of a batch and its exact gradient. With a dropout
/// seed, every encoder call draws input masks from a stream derived from
/// (seed, example index); without one the pass is deterministic and dropout-free.
BatchGradients compute_batch_gradients(const GruParams& params,
                                       std::span<const TrainingExample> batch,
                                       const EmbeddingTable& table, const TrainConfig& config,
                                       const std::uint64_t* dropout_seed);

/// Forward-only, dropout-free mean loss (for finite-difference checks).
double evaluate_batch_objective(const GruParams& params, std::span<const TrainingExample> batch,
                                const EmbeddingTable& table, const TrainConfig& config);

struct StepResult {
  double loss = 0.0;  // before the update
  double clip_scale = 1.0;
  double pre_clip_norm = 0.0;
  double post_clip_norm = 0.0;
};

/// One SGD update: gradients, global-norm clipping, params -= lr * grads.
/// Word vectors in `table` are updated only when freeze_embeddings is false.
StepResult train_step(GruParams& params, std::span<const TrainingExample> batch,
                      EmbeddingTable& table, const TrainConfig& config, SeededRng& rng);

struct StepReport {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  StepResult result;
};

struct TrainOptions {
  /// Replaces the default dev metric (ranking accuracy on dev pairs).
  std::function<double(const GruParams&, const EmbeddingTable&)> dev_metric;
  /// Optional contrasts fixed per training pair (aligned with train_pairs);
  /// the remaining k - fixed are sampled from the pool.
  std::vector<std::vector<std::string>> fixed_contrasts;
  std::function<void(const StepReport&)> on_step;
  std::function<void(const EpochLog&)> on_epoch;
  /// When false, EpochLog::seconds is always 0 so logs are reproducible.
  bool record_wall_time = true;
};

struct TrainResult {
  Checkpoint checkpoint;  // best dev epoch, not the last
  std::vector<EpochLog> logs;
};

TrainResult train(const TrainConfig& config, std::span<const ParaphrasePair> train_pairs,
                  std::span<const ParaphrasePair> dev_pairs, const EmbeddingTable& table,
                  const TrainOptions& options = {});

/// Tokenized example with its contrasts resolved from the pool.
TrainingExample make_example(const ParaphrasePair& pair, std::span<const std::string> pool,
                             std::size_t k, std::span<const std::string> fixed_contrasts,
                             SeededRng& rng);

/// Applies a checkpoint's fine-tuned vectors to a copy of the table.
EmbeddingTable apply_embedding_delta(const EmbeddingTable& table, const Checkpoint& ckpt);

void write_metrics_tsv(const std::filesystem::path& path, std::span<const EpochLog> logs);
std::string metrics_tsv(std::span<const EpochLog> logs);

}  // namespace pgru
