#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pgru/config.hpp"
#include "pgru/encoders.hpp"

namespace pgru {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  TrainConfig config;
  GruParams params;
  // Fine-tuned word vectors, sorted by word; empty when embeddings were frozen.
  std::vector<std::pair<std::string, DenseVector>> embedding_delta;
  double best_dev_metric = 0.0;
  std::uint32_t epoch = 0;
  std::uint64_t run_seed = 0;
};

/// Bitwise equality (doubles compared by representation).
bool bit_equal(const Checkpoint& a, const Checkpoint& b);

/// Layout, little-endian throughout:
///   "PGRU" | version u32 | config (u32 length + UTF-8 key=value lines)
///   | epoch u32 | best_dev_metric f64 | run_seed u64
///   | tensor count u32 | per tensor: rows u32, cols u32, row-major f64
///   | delta count u32 | per entry: word (u32 length + bytes), dim u32, f64 values
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, unsupported version, truncation or trailing bytes.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pgru
