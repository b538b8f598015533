#include "support/fixtures.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "pgru/objective.hpp"

namespace pgru::testing {

namespace {

DenseVector gaussian(std::size_t dim, SeededRng& rng, double scale) {
  DenseVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = scale * rng.normal();
  return v;
}

DenseVector plus(const DenseVector& a, const DenseVector& b) {
  DenseVector out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] += b[i];
  return out;
}

std::string letters(std::size_t value, std::size_t width) {
  std::string s(width, 'a');
  for (std::size_t i = 0; i < width; ++i) {
    s[width - 1 - i] = static_cast<char>('a' + value % 26);
    value /= 26;
  }
  return s;
}

// Concepts x 2 synonyms; word names are supplied or generated.
struct Lexicon {
  std::vector<std::array<std::string, 2>> words;
  EmbeddingTable table;
};

Lexicon make_lexicon(std::size_t concepts, std::size_t dim, double noise, SeededRng& rng,
                     const std::vector<std::array<std::string, 2>>& named) {
  Lexicon lex;
  lex.table = EmbeddingTable(dim, true);
  for (std::size_t c = 0; c < concepts; ++c) {
    std::array<std::string, 2> names;
    if (c < named.size()) {
      names = named[c];
    } else {
      names = {"q" + letters(c, 2) + "x", "q" + letters(c, 2) + "y"};
    }
    const DenseVector center = gaussian(dim, rng, 1.0);
    for (const auto& n : names) lex.table.add(n, plus(center, gaussian(dim, rng, noise)));
    lex.words.push_back(names);
  }
  return lex;
}

std::vector<ParaphrasePair> concept_pairs(const Lexicon& lex, std::size_t n, SeededRng& rng,
                                          std::vector<std::pair<std::size_t, std::size_t>> seeded) {
  const std::size_t concepts = lex.words.size();
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<ParaphrasePair> pairs;
  auto emit = [&](std::size_t u, std::size_t v) {
    const std::size_t s = rng.uniform_index(2);
    pairs.push_back({lex.words[u][s] + " " + lex.words[v][s],
                     lex.words[u][1 - s] + " " + lex.words[v][1 - s]});
  };
  for (const auto& [u, v] : seeded) {
    used.insert({u, v});
    pairs.push_back({lex.words[u][0] + " " + lex.words[v][0], lex.words[u][1] + " " + lex.words[v][1]});
  }
  while (pairs.size() < n) {
    const std::size_t u = rng.uniform_index(concepts);
    const std::size_t v = rng.uniform_index(concepts);
    if (u == v || !used.insert({u, v}).second) continue;
    emit(u, v);
  }
  return pairs;
}

}  // namespace

SyntheticCorpus overfit_fixture() {
  SeededRng rng(20240501);
  const Lexicon lex = make_lexicon(25, 8, 0.1, rng, {{"black", "dark"}, {"cat", "kitty"}});
  return {lex.table, concept_pairs(lex, 40, rng, {{0, 1}})};
}

TrainConfig overfit_config() {
  TrainConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.batch_size = 8;
  c.max_epochs = 200;
  c.dropout_rate = 0.0;
  c.k_contrasts = 9;
  c.dev_eval_k = 9;
  c.early_stop_patience = 200;
  c.seed = 7;
  return c;
}

SyntheticCorpus scaling_corpus(std::size_t n_pairs, std::uint64_t seed) {
  SeededRng rng = SeededRng::derive(seed, {0x5CA1E});
  const Lexicon lex = make_lexicon(60, 8, 0.6, rng, {});
  return {lex.table, concept_pairs(lex, n_pairs, rng, {})};
}

TrainConfig scaling_config() {
  TrainConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 16;
  c.batch_size = 16;
  c.max_epochs = 30;
  c.dropout_rate = 0.0;
  c.k_contrasts = 9;
  c.dev_eval_k = 29;
  c.early_stop_patience = 30;
  return c;
}

std::vector<ParaphrasePair> random_phrase_pairs(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::set<std::string> seen;
  auto phrase = [&] {
    for (;;) {
      const std::size_t words = 1 + rng.uniform_index(3);
      std::string p;
      for (std::size_t w = 0; w < words; ++w) {
        if (w > 0) p += ' ';
        p += letters(rng.uniform_index(26 * 26 * 26), 3);
      }
      if (seen.insert(p).second) return p;
    }
  };
  std::vector<ParaphrasePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string a = phrase();
    pairs.push_back({a, phrase()});
  }
  return pairs;
}

std::vector<TurneyExample> random_turney_examples(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<TurneyExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TurneyExample ex;
    ex.bigram = letters(rng.uniform_index(26 * 26 * 26), 3) + " " +
                letters(rng.uniform_index(26 * 26 * 26), 3);
    std::set<std::string> cands;
    while (cands.size() < 5) cands.insert(letters(rng.uniform_index(26 * 26 * 26 * 26), 4));
    ex.candidates.assign(cands.begin(), cands.end());
    // Shuffle so the answer position is not tied to lexical order.
    for (std::size_t j = ex.candidates.size(); j > 1; --j) {
      std::swap(ex.candidates[j - 1], ex.candidates[rng.uniform_index(j)]);
    }
    ex.answer_index = rng.uniform_index(5);
    out.push_back(std::move(ex));
  }
  return out;
}

double brute_force_ranking(const Encoder& encoder, const std::vector<ParaphrasePair>& pairs,
                           const std::vector<std::string>& pool, std::size_t k, std::uint64_t seed) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SeededRng rng = SeededRng::derive(seed, {i});
    const std::string exclude[] = {pairs[i].p1, pairs[i].p2};
    const auto idx = sample_contrasts(pool, k, exclude, rng);
    const DenseVector a = encoder.encode(tokenize(pairs[i].p1));
    const DenseVector b = encoder.encode(tokenize(pairs[i].p2));
    const double target = cosine_similarity(a, b);
    bool wins = true;
    for (std::size_t c : idx) {
      if (cosine_similarity(a, encoder.encode(tokenize(pool[c]))) > target) wins = false;
    }
    correct += wins ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.word(i);
    for (double v : table.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pgru_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(PGRU_FIXTURE_DIR) / name;
}

}  // namespace pgru::testing
