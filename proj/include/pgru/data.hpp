#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pgru/numeric.hpp"
#include "pgru/objective.hpp"

namespace pgru {

/// Frozen word -> vector map. Rows are stored contiguously in load order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, bool lowercase) : dim_(dim), lowercase_(lowercase) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool lowercase() const { return lowercase_; }

  /// Returns false (and leaves the table unchanged) when the word exists.
  bool add(std::string word, const DenseVector& vec);
  bool contains(std::string_view word) const;
  std::optional<std::size_t> index_of(std::string_view word) const;

  const std::string& word(std::size_t index) const { return words_[index]; }
  DenseVector vector(std::size_t index) const;
  /// Throws InvalidArgument for an unknown word.
  DenseVector lookup(std::string_view word) const;
  std::span<double> row(std::size_t index);
  std::span<const double> row(std::size_t index) const;

  /// Applies the table's case policy to a raw token or phrase.
  std::string normalize(std::string_view text) const;

  /// Vectors for every token; throws InvalidArgument naming the first OOV word.
  std::vector<DenseVector> vectors_for(std::span<const std::string> tokens) const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_ = 0;
  bool lowercase_ = true;
  std::vector<std::string> words_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingLoadReport {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
  bool had_header = false;
};

/// Text format: optional "<vocab> <dim>" header, then "word v1 ... v_dim".
/// Duplicate words keep their first occurrence.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt,
                               bool lowercase = true, EmbeddingLoadReport* report = nullptr);
EmbeddingTable parse_embeddings(std::string_view text,
                                std::optional<std::size_t> expected_dim = std::nullopt,
                                bool lowercase = true, EmbeddingLoadReport* report = nullptr);

std::string to_lower_ascii(std::string_view text);
TokenSeq tokenize(std::string_view phrase);
std::string join_tokens(std::span<const std::string> tokens, char sep = ' ');

struct PpdbRecord {
  std::string lhs_label;
  std::string phrase;
  std::string paraphrase;
  std::string raw_features;
  std::string remainder;
};

/// Splits on the exact delimiter " ||| ".
PpdbRecord parse_ppdb_line(std::string_view line);

struct ParaphrasePair {
  std::string p1;
  std::string p2;
  friend bool operator==(const ParaphrasePair&, const ParaphrasePair&) = default;
};

struct FilterReport {
  std::size_t input = 0;
  std::size_t identical = 0;       // rule 1
  std::size_t non_letter = 0;      // rule 2
  std::size_t out_of_vocab = 0;    // rule 3
  std::size_t single_words = 0;    // rule 4
  std::size_t duplicate = 0;       // exact or mirrored repeat of a kept pair
  std::size_t kept = 0;
  friend bool operator==(const FilterReport&, const FilterReport&) = default;
};

struct FilterResult {
  std::vector<ParaphrasePair> kept;
  FilterReport report;
};

/// True iff the text is ASCII letters separated by single spaces, with no
/// leading or trailing space.
bool letters_and_spaces_only(std::string_view text);

/// Applies the table's case policy, then drops pairs by the first failing
/// rule in order: identical, non-letter character, OOV word, both single
/// words; then drops exact and mirrored duplicates of earlier kept pairs.
FilterResult filter_pairs(std::span<const ParaphrasePair> pairs, const EmbeddingTable& vocab);

struct SplitSpec {
  double train_fraction = 0.8;
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  std::vector<ParaphrasePair> train;
  std::vector<ParaphrasePair> dev;
  std::vector<ParaphrasePair> test;
};

/// Seeded shuffle, then contiguous train/dev/test slices. Dev and test sizes
/// are rounded down; the remainder goes to train.
DatasetSplit split_dataset(std::span<const ParaphrasePair> pairs, const SplitSpec& spec);

/// floor(fraction * n) pairs chosen uniformly, returned in original order.
std::vector<ParaphrasePair> subsample_training(std::span<const ParaphrasePair> train,
                                               double fraction, std::uint64_t seed);

/// Deduplicated phrases from both sides, in first-appearance order.
std::vector<std::string> phrase_pool(std::span<const ParaphrasePair> pairs);

/// Pairs cache: "p1<TAB>p2" per line.
std::vector<ParaphrasePair> read_pairs_tsv(const std::filesystem::path& path);
void write_pairs_tsv(const std::filesystem::path& path, std::span<const ParaphrasePair> pairs);

struct SemEvalExample {
  std::string phrase_a;
  std::string phrase_b;
  bool label = false;
};

struct TurneyExample {
  std::string bigram;
  std::vector<std::string> candidates;  // exactly 5
  std::size_t answer_index = 0;
};

std::vector<SemEvalExample> load_semeval(const std::filesystem::path& path);
std::vector<SemEvalExample> parse_semeval(std::string_view text);
std::vector<TurneyExample> load_turney(const std::filesystem::path& path);
std::vector<TurneyExample> parse_turney(std::string_view text);

struct Turney10Item {
  std::string bigram;  // original or reversed orientation
  std::string candidate;
  bool correct = false;
};

/// Original orientation x 5 candidates, then reversed x 5 candidates.
std::vector<Turney10Item> build_turney10(const TurneyExample& example);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace pgru
