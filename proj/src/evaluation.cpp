#include "pgru/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "pgru/error.hpp"

namespace pgru {

namespace {

// argmax with ties to the lowest index.
std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

// Memoizes phrase encodings within one evaluation call.
class EncodingCache {
 public:
  explicit EncodingCache(const Encoder& encoder) : encoder_(encoder) {}

  const DenseVector& get(const TokenSeq& tokens) {
    const std::string key = join_tokens(tokens);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, encoder_.encode(tokens)).first;
    return it->second;
  }

 private:
  const Encoder& encoder_;
  std::unordered_map<std::string, DenseVector> cache_;
};

double ratio(std::size_t correct, std::size_t total) {
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

DenseVector SumEncoder::encode(std::span<const std::string> tokens) const {
  const auto vecs = table_.vectors_for(tokens);
  return sum_encode(vecs).vector;
}

DenseVector AvgEncoder::encode(std::span<const std::string> tokens) const {
  const auto vecs = table_.vectors_for(tokens);
  return avg_encode(vecs).vector;
}

GruEncoder::GruEncoder(const GruParams& params, const EmbeddingTable& table)
    : params_(params), table_(table) {
  if (params.input_dim() != table.dim()) {
    throw ConfigError("checkpoint expects " + std::to_string(params.input_dim()) +
                      "-dim word vectors but the embedding table has dim " +
                      std::to_string(table.dim()));
  }
}

DenseVector GruEncoder::encode(std::span<const std::string> tokens) const {
  const auto vecs = table_.vectors_for(tokens);
  return gru_encode(params_, vecs, nullptr, 0.0).embedding.vector;
}

DenseVector RandomEncoder::encode(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw InvalidArgument("cannot encode an empty token sequence");
  SeededRng rng = SeededRng::derive(seed_, {fnv1a64(join_tokens(tokens))});
  DenseVector v(dim_);
  double norm2 = 0.0;
  while (norm2 == 0.0) {
    for (std::size_t i = 0; i < dim_; ++i) {
      v[i] = rng.normal();
      norm2 += v[i] * v[i];
    }
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < dim_; ++i) v[i] *= inv;
  return v;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

double similarity(const DenseVector& a, const DenseVector& b, Similarity kind) {
  return kind == Similarity::cosine ? cosine_similarity(a, b) : dot_similarity(a, b);
}

std::optional<TokenSeq> resolve_phrase(const Encoder& encoder, std::string_view phrase,
                                       OovPolicy policy) {
  TokenSeq tokens = tokenize(encoder.normalize(phrase));
  TokenSeq kept;
  kept.reserve(tokens.size());
  for (auto& t : tokens) {
    if (encoder.covers(t)) {
      kept.push_back(std::move(t));
    } else if (policy == OovPolicy::skip) {
      return std::nullopt;
    }
  }
  if (kept.empty()) return std::nullopt;
  return kept;
}

// ---------------------------------------------------------------------------

RankingResult ranking_accuracy(const Encoder& encoder, std::span<const ParaphrasePair> test_pairs,
                               std::span<const std::string> pool, std::size_t k,
                               std::uint64_t seed, const EvalOptions& options) {
  if (k == 0) throw InvalidArgument("ranking needs k >= 1");
  std::vector<std::string> usable_pool;
  std::vector<TokenSeq> pool_tokens;
  for (const auto& phrase : pool) {
    if (auto tokens = resolve_phrase(encoder, phrase, options.oov)) {
      usable_pool.push_back(phrase);
      pool_tokens.push_back(std::move(*tokens));
    }
  }
  if (usable_pool.size() <= k + 2) {
    throw InvalidArgument("ranking pool of " + std::to_string(usable_pool.size()) +
                          " encodable phrases is too small for k=" + std::to_string(k));
  }

  RankingResult result;
  result.n_examples = test_pairs.size();
  result.k = k;
  result.seed = seed;
  EncodingCache cache(encoder);
  std::size_t correct = 0;
  std::vector<double> scores(k + 1);
  for (std::size_t i = 0; i < test_pairs.size(); ++i) {
    const auto& pair = test_pairs[i];
    auto t1 = resolve_phrase(encoder, pair.p1, options.oov);
    auto t2 = resolve_phrase(encoder, pair.p2, options.oov);
    if (!t1 || !t2) {
      ++result.oov_skipped;
      continue;
    }
    SeededRng rng = SeededRng::derive(seed, {i});
    const std::string exclude[] = {pair.p1, pair.p2};
    const auto contrasts = sample_contrasts(usable_pool, k, exclude, rng);

    const DenseVector anchor = cache.get(*t1);
    scores[0] = similarity(anchor, cache.get(*t2), options.similarity);
    for (std::size_t c = 0; c < k; ++c) {
      scores[c + 1] = similarity(anchor, cache.get(pool_tokens[contrasts[c]]), options.similarity);
    }
    if (argmax(scores) == 0) ++correct;
  }
  const std::size_t scored = result.n_examples - result.oov_skipped;
  if (scored == 0) throw EvaluationError("every ranking example was skipped as out-of-vocabulary");
  result.accuracy = ratio(correct, scored);
  return result;
}

// ---------------------------------------------------------------------------

double tune_threshold(std::vector<std::pair<double, bool>> scored, double* train_accuracy) {
  if (scored.empty()) throw EvaluationError("threshold tuning needs at least one scored example");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t n = scored.size();
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.second ? 1 : 0;

  // Threshold below everything: all predicted similar.
  double best_t = scored.front().first - 1.0;
  std::size_t best_correct = positives;
  std::size_t neg_below = 0, pos_below = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (scored[i].second ? pos_below : neg_below) += 1;
    const bool boundary = i + 1 == n || scored[i + 1].first > scored[i].first;
    if (!boundary) continue;
    const double t = i + 1 == n ? scored[i].first + 1.0
                                : scored[i].first + (scored[i + 1].first - scored[i].first) / 2.0;
    const std::size_t correct = neg_below + (positives - pos_below);
    if (correct > best_correct) {
      best_correct = correct;
      best_t = t;
    }
  }
  if (train_accuracy != nullptr) *train_accuracy = ratio(best_correct, n);
  return best_t;
}

SemEvalResult semeval_evaluate(const Encoder& encoder, std::span<const SemEvalExample> train,
                               std::span<const SemEvalExample> eval, const EvalOptions& options) {
  if (train.empty() || eval.empty()) throw InvalidArgument("SemEval evaluation needs train and eval examples");
  EncodingCache cache(encoder);
  auto score = [&](const SemEvalExample& ex) -> std::optional<double> {
    auto a = resolve_phrase(encoder, ex.phrase_a, options.oov);
    auto b = resolve_phrase(encoder, ex.phrase_b, options.oov);
    if (!a || !b) return std::nullopt;
    const DenseVector va = cache.get(*a);
    return similarity(va, cache.get(*b), options.similarity);
  };

  std::vector<std::pair<double, bool>> train_scores;
  for (const auto& ex : train) {
    if (auto s = score(ex)) train_scores.emplace_back(*s, ex.label);
  }
  if (train_scores.empty()) throw EvaluationError("every SemEval training example is out-of-vocabulary");

  SemEvalResult result;
  result.threshold = tune_threshold(std::move(train_scores), &result.train_accuracy);
  result.n_examples = eval.size();
  std::size_t correct = 0;
  for (const auto& ex : eval) {
    auto s = score(ex);
    if (!s) {
      ++result.oov_skipped;
      continue;
    }
    if ((*s >= result.threshold) == ex.label) ++correct;
  }
  const std::size_t scored = result.n_examples - result.oov_skipped;
  if (scored == 0) throw EvaluationError("every SemEval evaluation example is out-of-vocabulary");
  result.accuracy = ratio(correct, scored);
  return result;
}

namespace {

// Shared driver for the multiple-choice tasks: `items(ex)` yields
// (bigram, candidate) pairs in tie-break order plus the correct item index.
template <class ItemsFn>
ChoiceResult choice_evaluate(const Encoder& encoder, std::span<const TurneyExample> examples,
                             const EvalOptions& options, ItemsFn&& items) {
  if (examples.empty()) throw InvalidArgument("no Turney examples to evaluate");
  EncodingCache cache(encoder);
  ChoiceResult result;
  result.n_examples = examples.size();
  std::size_t correct = 0;
  std::vector<double> scores;
  for (const auto& ex : examples) {
    const auto [pairs, answer] = items(ex);
    scores.clear();
    bool skip = false;
    for (const auto& [bigram, candidate] : pairs) {
      auto b = resolve_phrase(encoder, bigram, options.oov);
      auto c = resolve_phrase(encoder, candidate, options.oov);
      if (!b || !c) {
        skip = true;
        break;
      }
      const DenseVector vb = cache.get(*b);
      scores.push_back(similarity(vb, cache.get(*c), options.similarity));
    }
    if (skip) {
      ++result.oov_skipped;
      continue;
    }
    if (argmax(scores) == answer) ++correct;
  }
  const std::size_t scored = result.n_examples - result.oov_skipped;
  if (scored == 0) throw EvaluationError("every Turney example is out-of-vocabulary");
  result.accuracy = ratio(correct, scored);
  return result;
}

using ChoiceItems = std::pair<std::vector<std::pair<std::string, std::string>>, std::size_t>;

}  // namespace

ChoiceResult turney5_evaluate(const Encoder& encoder, std::span<const TurneyExample> examples,
                              const EvalOptions& options) {
  return choice_evaluate(encoder, examples, options, [](const TurneyExample& ex) {
    ChoiceItems items;
    for (const auto& c : ex.candidates) items.first.emplace_back(ex.bigram, c);
    items.second = ex.answer_index;
    return items;
  });
}

ChoiceResult turney10_evaluate(const Encoder& encoder, std::span<const TurneyExample> examples,
                               const EvalOptions& options) {
  return choice_evaluate(encoder, examples, options, [](const TurneyExample& ex) {
    ChoiceItems items;
    const auto built = build_turney10(ex);
    for (std::size_t i = 0; i < built.size(); ++i) {
      items.first.emplace_back(built[i].bigram, built[i].candidate);
      if (built[i].correct) items.second = i;
    }
    return items;
  });
}

// ---------------------------------------------------------------------------

namespace {

bool phrase_in_vocab(const std::string& phrase, const EmbeddingTable& table) {
  const auto tokens = tokenize(phrase);
  if (tokens.empty()) return false;
  return std::all_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return table.contains(t); });
}

std::string normalized_phrase(const EmbeddingTable& table, std::string_view text) {
  return join_tokens(tokenize(table.normalize(text)));
}

}  // namespace

std::vector<ParaphrasePair> semeval_training_pairs(std::span<const SemEvalExample> examples,
                                                   const EmbeddingTable& table) {
  std::vector<ParaphrasePair> pairs;
  for (const auto& ex : examples) {
    if (!ex.label) continue;
    ParaphrasePair p{normalized_phrase(table, ex.phrase_a), normalized_phrase(table, ex.phrase_b)};
    if (p.p1 == p.p2 || !phrase_in_vocab(p.p1, table) || !phrase_in_vocab(p.p2, table)) continue;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

TurneyTrainingData turney_training_data(std::span<const TurneyExample> examples,
                                        const EmbeddingTable& table) {
  TurneyTrainingData data;
  for (const auto& ex : examples) {
    const std::string bigram = normalized_phrase(table, ex.bigram);
    if (!phrase_in_vocab(bigram, table)) continue;
    std::vector<std::string> normalized;
    bool ok = true;
    for (const auto& c : ex.candidates) {
      normalized.push_back(normalized_phrase(table, c));
      ok = ok && phrase_in_vocab(normalized.back(), table);
    }
    if (!ok) continue;
    std::vector<std::string> wrong;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      if (i != ex.answer_index) wrong.push_back(normalized[i]);
    }
    data.pairs.push_back({bigram, normalized[ex.answer_index]});
    data.fixed_contrasts.push_back(std::move(wrong));
  }
  return data;
}

// ---------------------------------------------------------------------------

std::vector<SweepCell> sweep(const TrainConfig& base, std::span<const ParaphrasePair> train,
                             std::span<const ParaphrasePair> dev,
                             std::span<const ParaphrasePair> test, const EmbeddingTable& table,
                             std::span<const double> fractions, std::span<const std::size_t> ks,
                             std::size_t eval_k, const EvalOptions& options) {
  const std::vector<std::string> test_pool = phrase_pool(test);
  std::vector<SweepCell> cells;
  for (double fraction : fractions) {
    // Every k at one fraction trains on the same subsample.
    const std::uint64_t subsample_seed =
        SeededRng::mix(base.seed, {0x5757, std::bit_cast<std::uint64_t>(fraction)});
    const auto subset = subsample_training(train, fraction, subsample_seed);
    for (std::size_t k : ks) {
      SweepCell cell;
      cell.fraction = fraction;
      cell.k = k;
      cell.seed = SeededRng::mix(base.seed, {std::bit_cast<std::uint64_t>(fraction), k});
      cell.train_size = subset.size();
      TrainConfig config = base;
      config.k_contrasts = k;
      config.seed = cell.seed;
      TrainOptions train_options;
      train_options.record_wall_time = false;
      TrainResult trained = pgru::train(config, subset, dev, table, train_options);
      cell.best_dev = trained.checkpoint.best_dev_metric;
      const EmbeddingTable tuned = apply_embedding_delta(table, trained.checkpoint);
      GruEncoder encoder(trained.checkpoint.params, tuned);
      cell.test = ranking_accuracy(encoder, test, test_pool, eval_k, base.seed, options);
      cells.push_back(cell);
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------

std::string report_tsv(std::span<const TaskReportRow> rows) {
  std::string out = "task\tencoder\tk\tn\toov_skipped\taccuracy\n";
  for (const auto& r : rows) {
    out += r.task + '\t' + r.encoder + '\t' + std::to_string(r.k) + '\t' + std::to_string(r.n) +
           '\t' + std::to_string(r.oov_skipped) + '\t' + format_double(r.accuracy) + '\n';
  }
  return out;
}

namespace {

// Published accuracies (percent) on the full-scale datasets.
std::string published_reference(const std::string& task, const std::string& encoder) {
  static const std::map<std::pair<std::string, std::string>, std::string> kPublished = {
      {{"ranking", "avg"}, "88 (k=99)"},
      {{"semeval", "sum"}, "65.46"},
      {{"semeval", "gru"}, "73.44 task / 71.29 ppdb"},
      {{"turney5", "sum"}, "39.58"},
      {{"turney5", "gru"}, "48.88 task / 41.44 ppdb"},
      {{"turney10", "sum"}, "19.79"},
      {{"turney10", "gru"}, "39.23 task / 26.37 ppdb"},
  };
  auto it = kPublished.find({task, encoder});
  return it == kPublished.end() ? "-" : it->second;
}

}  // namespace

std::string report_table(std::span<const TaskReportRow> rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-8s %5s %8s %6s %10s  %s\n", "task", "encoder", "k", "n",
                "oov", "accuracy%", "published%");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %-8s %5zu %8zu %6zu %10.2f  %s\n", r.task.c_str(),
                  r.encoder.c_str(), r.k, r.n, r.oov_skipped, 100.0 * r.accuracy,
                  published_reference(r.task, r.encoder).c_str());
    out += line;
  }
  return out;
}

}  // namespace pgru
