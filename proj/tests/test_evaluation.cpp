#include <doctest.h>

#include <cmath>
#include <map>

#include "pgru/error.hpp"
#include "pgru/evaluation.hpp"
#include "support/fixtures.hpp"

using namespace pgru;
using namespace pgru::testing;

namespace {

// Maps each pair's two phrases to one shared basis vector; every other
// phrase gets a basis vector of its own, so all non-paraphrases are orthogonal.
class OracleEncoder : public Encoder {
 public:
  explicit OracleEncoder(const std::vector<ParaphrasePair>& pairs) {
    for (const auto& p : pairs) {
      const std::size_t id = next_++;
      slot_[p.p1] = id;
      slot_[p.p2] = id;
    }
  }
  std::string name() const override { return "oracle"; }
  bool covers(std::string_view) const override { return true; }
  DenseVector encode(std::span<const std::string> tokens) const override {
    const std::string key = join_tokens(tokens);
    auto it = slot_.find(key);
    const std::size_t id = it == slot_.end() ? next_ + std::hash<std::string>{}(key) % 1000 : it->second;
    DenseVector v(next_ + 1000);
    v[id] = 1.0;
    return v;
  }

 private:
  std::map<std::string, std::size_t> slot_;
  std::size_t next_ = 0;
};

// Wraps another encoder and multiplies its output by a positive constant.
class ScaledEncoder : public Encoder {
 public:
  ScaledEncoder(const Encoder& inner, double factor) : inner_(inner), factor_(factor) {}
  std::string name() const override { return inner_.name(); }
  bool covers(std::string_view w) const override { return inner_.covers(w); }
  std::string normalize(std::string_view t) const override { return inner_.normalize(t); }
  DenseVector encode(std::span<const std::string> tokens) const override {
    DenseVector v = inner_.encode(tokens);
    for (std::size_t i = 0; i < v.dim(); ++i) v[i] *= factor_;
    return v;
  }

 private:
  const Encoder& inner_;
  double factor_;
};

std::vector<SemEvalExample> fixture_semeval(const SyntheticCorpus& c) {
  std::vector<SemEvalExample> out;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    out.push_back({c.pairs[i].p1, c.pairs[i].p2, true});
    out.push_back({c.pairs[i].p1, c.pairs[(i + 7) % c.pairs.size()].p2, false});
  }
  return out;
}

std::vector<TurneyExample> fixture_turney(const SyntheticCorpus& c) {
  // Bigram = a pair's p1; candidates are single words from the vocabulary.
  std::vector<TurneyExample> out;
  for (std::size_t i = 0; i < 20; ++i) {
    TurneyExample ex;
    ex.bigram = c.pairs[i].p1;
    for (std::size_t j = 0; j < 5; ++j) ex.candidates.push_back(c.table.word((i * 3 + j * 7) % c.table.size()));
    ex.answer_index = i % 5;
    out.push_back(ex);
  }
  return out;
}

}  // namespace

TEST_CASE("oracle encoder ranks perfectly for any k and seed") {
  const auto pairs = random_phrase_pairs(300, 1);
  const auto pool = phrase_pool(pairs);
  const OracleEncoder oracle(pairs);
  for (std::size_t k : {1, 9, 99}) {
    for (std::uint64_t seed : {1, 2}) {
      const auto r = ranking_accuracy(oracle, pairs, pool, k, seed);
      CHECK(r.accuracy == 1.0);
      CHECK(r.n_examples == 300);
      CHECK(r.k == k);
    }
  }
}

TEST_CASE("ranking agrees with the brute-force scorer and is deterministic") {
  const auto corpus = overfit_fixture();
  const AvgEncoder avg(corpus.table);
  const auto pool = phrase_pool(corpus.pairs);
  const auto a = ranking_accuracy(avg, corpus.pairs, pool, 9, 3);
  const auto b = ranking_accuracy(avg, corpus.pairs, pool, 9, 3);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy == brute_force_ranking(avg, corpus.pairs, pool, 9, 3));
  CHECK_THROWS_AS(ranking_accuracy(avg, corpus.pairs, pool, 0, 3), InvalidArgument);
  CHECK_THROWS_AS(ranking_accuracy(avg, corpus.pairs, pool, 79, 3), InvalidArgument);
}

TEST_CASE("ties go to the true paraphrase") {
  // A constant encoder makes every candidate tie with p2.
  class Constant : public Encoder {
   public:
    std::string name() const override { return "const"; }
    bool covers(std::string_view) const override { return true; }
    DenseVector encode(std::span<const std::string>) const override { return DenseVector{1.0, 1.0}; }
  } constant;
  const auto pairs = random_phrase_pairs(20, 2);
  CHECK(ranking_accuracy(constant, pairs, phrase_pool(pairs), 5, 1).accuracy == 1.0);
}

TEST_CASE("cosine rankings are invariant to positive rescaling") {
  const auto corpus = overfit_fixture();
  const AvgEncoder avg(corpus.table);
  const ScaledEncoder scaled(avg, 3.7);
  const auto pool = phrase_pool(corpus.pairs);
  CHECK(ranking_accuracy(avg, corpus.pairs, pool, 9, 1).accuracy ==
        ranking_accuracy(scaled, corpus.pairs, pool, 9, 1).accuracy);
}

TEST_CASE("SUM and AVG agree on every task; turney10 equals turney5 for both") {
  const auto corpus = overfit_fixture();
  const SumEncoder sum(corpus.table);
  const AvgEncoder avg(corpus.table);
  const auto pool = phrase_pool(corpus.pairs);
  CHECK(ranking_accuracy(sum, corpus.pairs, pool, 9, 4).accuracy ==
        ranking_accuracy(avg, corpus.pairs, pool, 9, 4).accuracy);
  const auto sem = fixture_semeval(corpus);
  CHECK(semeval_evaluate(sum, sem, sem).accuracy == semeval_evaluate(avg, sem, sem).accuracy);
  const auto tur = fixture_turney(corpus);
  const double s5 = turney5_evaluate(sum, tur).accuracy;
  CHECK(s5 == turney5_evaluate(avg, tur).accuracy);
  CHECK(turney10_evaluate(sum, tur).accuracy == s5);
  CHECK(turney10_evaluate(avg, tur).accuracy == s5);
}

TEST_CASE("threshold tuning scans sorted midpoints") {
  double train_acc = 0.0;
  const double t = tune_threshold({{0.1, false}, {0.9, true}, {0.3, false}, {0.7, true}}, &train_acc);
  CHECK(train_acc == 1.0);
  CHECK(t == doctest::Approx(0.5));

  // Two equally good cuts (between 0.2|0.4 and 0.6|0.8): the lower wins.
  const double tie = tune_threshold({{0.2, false}, {0.4, true}, {0.6, false}, {0.8, true}}, &train_acc);
  CHECK(train_acc == 0.75);
  CHECK(tie == doctest::Approx(0.3));

  // All positive: the cut sits below every similarity.
  CHECK(tune_threshold({{0.5, true}, {0.6, true}}, &train_acc) < 0.5);
  CHECK(train_acc == 1.0);
  // All negative: above every similarity.
  CHECK(tune_threshold({{0.5, false}, {0.6, false}}, &train_acc) > 0.6);
  CHECK_THROWS_AS(tune_threshold({}), EvaluationError);
}

TEST_CASE("SemEval evaluation: separable data, OOV policies, exhaustion") {
  const EmbeddingTable t = parse_embeddings("a 1 0\nb 0.9 0.1\nc 0 1\nd -1 0\n");
  const AvgEncoder avg(t);
  const std::vector<SemEvalExample> train = {{"a", "b", true}, {"a", "c", false}, {"a", "d", false}};
  const auto r = semeval_evaluate(avg, train, train);
  CHECK(r.train_accuracy == 1.0);
  CHECK(r.accuracy == 1.0);

  // Everything below the threshold and labelled false.
  const std::vector<SemEvalExample> negatives = {{"a", "d", false}, {"c", "d", false}};
  CHECK(semeval_evaluate(avg, train, negatives).accuracy == 1.0);

  const std::vector<SemEvalExample> with_oov = {{"a", "b", true}, {"a zz", "b", true}};
  const auto skipped = semeval_evaluate(avg, train, with_oov);
  CHECK(skipped.oov_skipped == 1);
  CHECK(skipped.n_examples == 2);
  CHECK(skipped.accuracy == 1.0);
  const auto dropped = semeval_evaluate(avg, train, with_oov, {Similarity::cosine, OovPolicy::drop});
  CHECK(dropped.oov_skipped == 0);
  CHECK(dropped.accuracy == 1.0);

  const std::vector<SemEvalExample> all_oov = {{"zz", "yy", true}};
  CHECK_THROWS_AS(semeval_evaluate(avg, train, all_oov), EvaluationError);
}

TEST_CASE("Turney with a constructed oracle table") {
  // AVG("red apple") points exactly at the answer word.
  const EmbeddingTable t = parse_embeddings(
      "red 1 0 0\napple 0 1 0\nanswer 0.5 0.5 0\nx 0 0 1\ny 1 -1 0\nz -1 0 0\nw 0 -1 0\n");
  const AvgEncoder avg(t);
  const std::vector<TurneyExample> ex = {{"red apple", {"x", "y", "answer", "z", "w"}, 2}};
  CHECK(turney5_evaluate(avg, ex).accuracy == 1.0);
  CHECK(turney10_evaluate(avg, ex).accuracy == 1.0);
  const std::vector<TurneyExample> oov = {{"red apple", {"x", "y", "answer", "z", "nope"}, 2}};
  CHECK_THROWS_AS(turney5_evaluate(avg, oov), EvaluationError);
}

TEST_CASE("random encoder: seeded unit vectors") {
  const RandomEncoder r(5);
  const TokenSeq p = {"some", "phrase"};
  const DenseVector v = r.encode(p);
  CHECK(v.dim() == 64);
  CHECK(std::sqrt(squared_norm(v.span())) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v == r.encode(p));
  CHECK_FALSE(v == RandomEncoder(6).encode(p));
  CHECK_FALSE(v == r.encode(TokenSeq{"phrase", "some"}));
}

TEST_CASE("task-specific training conversions") {
  const EmbeddingTable t = parse_embeddings("red 1\ncar 1\nauto 1\nold 1\nman 1\n");
  const std::vector<SemEvalExample> sem = {
      {"Red car", "red auto", true}, {"old man", "red car", false}, {"red zz", "car", true}};
  const auto pairs = semeval_training_pairs(sem, t);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == ParaphrasePair{"red car", "red auto"});

  const std::vector<TurneyExample> tur = {{"old man", {"red", "car", "auto", "old", "man"}, 3}};
  const auto data = turney_training_data(tur, t);
  REQUIRE(data.pairs.size() == 1);
  CHECK(data.pairs[0] == ParaphrasePair{"old man", "old"});
  CHECK(data.fixed_contrasts[0] == std::vector<std::string>{"red", "car", "auto", "man"});
}

TEST_CASE("sweep grid covers every fraction x k cell") {
  const auto corpus = scaling_corpus(200, 1);
  SplitSpec spec;
  spec.seed = 1;
  const auto split = split_dataset(corpus.pairs, spec);
  TrainConfig c = scaling_config();
  c.max_epochs = 1;
  c.dev_eval_k = 9;
  const std::vector<double> fractions = {0.1, 0.5, 1.0};
  const std::vector<std::size_t> ks = {3, 5, 9};
  const auto cells = sweep(c, split.train, split.dev, split.test, corpus.table, fractions, ks, 9);
  REQUIRE(cells.size() == 9);
  CHECK(cells[0].fraction == 0.1);
  CHECK(cells[0].k == 3);
  CHECK(cells[0].train_size == 16);
  CHECK(cells[8].train_size == 160);
  CHECK(cells[0].seed != cells[1].seed);
  for (const auto& cell : cells) CHECK(cell.test.n_examples == 20);
}

TEST_CASE("report formats") {
  const std::vector<TaskReportRow> rows = {{"ranking", "avg", 99, 1000, 3, 0.875}};
  CHECK(report_tsv(rows) == "task\tencoder\tk\tn\toov_skipped\taccuracy\nranking\tavg\t99\t1000\t3\t0.875\n");
  const std::string table = report_table(rows);
  CHECK(table.find("87.50") != std::string::npos);
  CHECK(table.find("88") != std::string::npos);
}
