#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/encoders.hpp"
#include "pgru/training.hpp"

namespace pgru {

/// Phrase (word sequence) -> embedding. Evaluation encoders never apply dropout.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::string name() const = 0;
  virtual bool covers(std::string_view word) const = 0;
  virtual DenseVector encode(std::span<const std::string> tokens) const = 0;
  /// Case policy applied to raw task text before lookup.
  virtual std::string normalize(std::string_view text) const { return std::string(text); }
};

class SumEncoder : public Encoder {
 public:
  explicit SumEncoder(const EmbeddingTable& table) : table_(table) {}
  std::string name() const override { return "sum"; }
  bool covers(std::string_view word) const override { return table_.contains(word); }
  DenseVector encode(std::span<const std::string> tokens) const override;
  std::string normalize(std::string_view text) const override { return table_.normalize(text); }

 private:
  const EmbeddingTable& table_;
};

class AvgEncoder : public Encoder {
 public:
  explicit AvgEncoder(const EmbeddingTable& table) : table_(table) {}
  std::string name() const override { return "avg"; }
  bool covers(std::string_view word) const override { return table_.contains(word); }
  DenseVector encode(std::span<const std::string> tokens) const override;
  std::string normalize(std::string_view text) const override { return table_.normalize(text); }

 private:
  const EmbeddingTable& table_;
};

/// Last hidden state of the GRU, run in inference mode (no dropout masks).
class GruEncoder : public Encoder {
 public:
  GruEncoder(const GruParams& params, const EmbeddingTable& table);
  std::string name() const override { return "gru"; }
  bool covers(std::string_view word) const override { return table_.contains(word); }
  DenseVector encode(std::span<const std::string> tokens) const override;
  std::string normalize(std::string_view text) const override { return table_.normalize(text); }

 private:
  const GruParams& params_;
  const EmbeddingTable& table_;
};

/// Seeded random unit vector per distinct phrase text; a chance-level reference.
class RandomEncoder : public Encoder {
 public:
  explicit RandomEncoder(std::uint64_t seed, std::size_t dim = 64) : seed_(seed), dim_(dim) {}
  std::string name() const override { return "random"; }
  bool covers(std::string_view) const override { return true; }
  DenseVector encode(std::span<const std::string> tokens) const override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

enum class OovPolicy { skip, drop };

struct EvalOptions {
  Similarity similarity = Similarity::cosine;
  OovPolicy oov = OovPolicy::skip;
};

double similarity(const DenseVector& a, const DenseVector& b, Similarity kind);

/// Normalized tokens the encoder can consume, or nullopt when the phrase must
/// be skipped (any OOV word under `skip`, nothing left under `drop`).
std::optional<TokenSeq> resolve_phrase(const Encoder& encoder, std::string_view phrase,
                                       OovPolicy policy);

std::uint64_t fnv1a64(std::string_view bytes);

struct RankingResult {
  double accuracy = 0.0;
  std::size_t n_examples = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t oov_skipped = 0;
};

/// For each pair: sample k contrasts (stream (seed, example index)), rank
/// {p2, c_1..c_k} by similarity to p1; ties go to the lowest candidate index
/// (p2 is index 0). Unencodable pool phrases are removed before sampling.
RankingResult ranking_accuracy(const Encoder& encoder, std::span<const ParaphrasePair> test_pairs,
                               std::span<const std::string> pool, std::size_t k,
                               std::uint64_t seed, const EvalOptions& options = {});

struct SemEvalResult {
  double accuracy = 0.0;
  double threshold = 0.0;
  double train_accuracy = 0.0;
  std::size_t n_examples = 0;
  std::size_t oov_skipped = 0;
};

/// Midpoint-of-sorted-similarities threshold maximizing train accuracy
/// (ties -> lowest threshold); predicts similar iff sim >= threshold.
double tune_threshold(std::vector<std::pair<double, bool>> scored, double* train_accuracy = nullptr);

SemEvalResult semeval_evaluate(const Encoder& encoder, std::span<const SemEvalExample> train,
                               std::span<const SemEvalExample> eval,
                               const EvalOptions& options = {});

struct ChoiceResult {
  double accuracy = 0.0;
  std::size_t n_examples = 0;
  std::size_t oov_skipped = 0;
};

ChoiceResult turney5_evaluate(const Encoder& encoder, std::span<const TurneyExample> examples,
                              const EvalOptions& options = {});
ChoiceResult turney10_evaluate(const Encoder& encoder, std::span<const TurneyExample> examples,
                               const EvalOptions& options = {});

/// Task-specific training data: SemEval positives become paraphrase pairs.
std::vector<ParaphrasePair> semeval_training_pairs(std::span<const SemEvalExample> examples,
                                                   const EmbeddingTable& table);

struct TurneyTrainingData {
  std::vector<ParaphrasePair> pairs;                      // (bigram, answer)
  std::vector<std::vector<std::string>> fixed_contrasts;  // the wrong candidates
};
TurneyTrainingData turney_training_data(std::span<const TurneyExample> examples,
                                        const EmbeddingTable& table);

struct SweepCell {
  double fraction = 1.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  double best_dev = 0.0;
  RankingResult test;
};

/// Trains one model per (fraction, k) cell and ranks the test split at eval_k.
std::vector<SweepCell> sweep(const TrainConfig& base, std::span<const ParaphrasePair> train,
                             std::span<const ParaphrasePair> dev,
                             std::span<const ParaphrasePair> test, const EmbeddingTable& table,
                             std::span<const double> fractions, std::span<const std::size_t> ks,
                             std::size_t eval_k, const EvalOptions& options = {});

struct TaskReportRow {
  std::string task;
  std::string encoder;
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t oov_skipped = 0;
  double accuracy = 0.0;
};

/// "task<TAB>encoder<TAB>k<TAB>n<TAB>oov_skipped<TAB>accuracy" rows with a header.
std::string report_tsv(std::span<const TaskReportRow> rows);
/// Aligned table with published reference numbers where one exists.
std::string report_table(std::span<const TaskReportRow> rows);

}  // namespace pgru
