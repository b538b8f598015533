#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pgru {

enum class Similarity { cosine, dot };
enum class Precision { f64, f32 };

struct TrainConfig {
  std::size_t hidden_dim = 200;
  std::size_t embed_dim = 200;
  double lr = 0.3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 150;
  double dropout_rate = 0.5;
  double clip_norm = 5.0;
  std::size_t k_contrasts = 9;
  double margin = 1.0;
  std::uint64_t seed = 1;
  std::size_t early_stop_patience = 10;
  Similarity eval_similarity = Similarity::cosine;
  bool freeze_embeddings = true;
  bool use_bias = false;
  bool mirror_pairs = false;
  bool symmetric_loss = false;
  Precision precision = Precision::f64;
  bool lowercase = true;
  // Contrast count of the per-epoch dev ranking evaluation.
  std::size_t dev_eval_k = 99;
  std::size_t threads = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws ConfigError on an unknown key or unparsable value.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

/// Checks the invariants (lr >= 0, 0 <= dropout < 1, k >= 1, ...).
void validate(const TrainConfig& config);

/// Canonical key order, values formatted to round-trip exactly.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config);

/// "key=value\n" lines in canonical order.
std::string serialize_config(const TrainConfig& config);

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are errors.
void apply_config_text(TrainConfig& config, std::string_view text);
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);

std::string format_double(double v);
std::string_view to_string(Similarity s);
std::string_view to_string(Precision p);

}  // namespace pgru
