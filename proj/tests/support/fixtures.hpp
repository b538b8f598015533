#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/encoders.hpp"
#include "pgru/evaluation.hpp"

namespace pgru::testing {

struct SyntheticCorpus {
  EmbeddingTable table;
  std::vector<ParaphrasePair> pairs;
};

/// 25 concepts x 2 synonyms = 50 words of 8 dims (concept vector plus small
/// noise); 40 two-word pairs whose sides use synonymous words in the same
/// order. The first pair is ("black cat", "dark kitty").
SyntheticCorpus overfit_fixture();

/// Training settings under which the GRU memorizes overfit_fixture().
TrainConfig overfit_config();

/// Paired-concept corpus of `n_pairs` pairs for the data-scaling check.
SyntheticCorpus scaling_corpus(std::size_t n_pairs, std::uint64_t seed);
TrainConfig scaling_config();

/// Distinct random letter phrases (1-3 words) forming `n` pairs.
std::vector<ParaphrasePair> random_phrase_pairs(std::size_t n, std::uint64_t seed);
std::vector<TurneyExample> random_turney_examples(std::size_t n, std::uint64_t seed);

/// Ranking accuracy computed directly from definitions: every candidate is
/// scored against p1 and p2 must strictly beat, or tie and precede, each one.
double brute_force_ranking(const Encoder& encoder, const std::vector<ParaphrasePair>& pairs,
                           const std::vector<std::string>& pool, std::size_t k, std::uint64_t seed);

/// Writes the table in the word2vec text format (with header).
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string slurp(const std::filesystem::path& path);

std::filesystem::path fixture_path(const std::string& name);

}  // namespace pgru::testing
