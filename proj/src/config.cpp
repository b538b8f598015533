#include "pgru/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include "pgru/data.hpp"
#include "pgru/error.hpp"

namespace pgru {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for config key '" +
                    std::string(key) + "'");
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value);
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"hidden_dim", [](TrainConfig& c, auto k, auto v) { c.hidden_dim = parse_int<std::size_t>(k, v); }},
      {"embed_dim", [](TrainConfig& c, auto k, auto v) { c.embed_dim = parse_int<std::size_t>(k, v); }},
      {"lr", [](TrainConfig& c, auto k, auto v) { c.lr = parse_real(k, v); }},
      {"batch_size", [](TrainConfig& c, auto k, auto v) { c.batch_size = parse_int<std::size_t>(k, v); }},
      {"max_epochs", [](TrainConfig& c, auto k, auto v) { c.max_epochs = parse_int<std::size_t>(k, v); }},
      {"dropout_rate", [](TrainConfig& c, auto k, auto v) { c.dropout_rate = parse_real(k, v); }},
      {"clip_norm", [](TrainConfig& c, auto k, auto v) { c.clip_norm = parse_real(k, v); }},
      {"k_contrasts", [](TrainConfig& c, auto k, auto v) { c.k_contrasts = parse_int<std::size_t>(k, v); }},
      {"margin", [](TrainConfig& c, auto k, auto v) { c.margin = parse_real(k, v); }},
      {"seed", [](TrainConfig& c, auto k, auto v) { c.seed = parse_int<std::uint64_t>(k, v); }},
      {"early_stop_patience",
       [](TrainConfig& c, auto k, auto v) { c.early_stop_patience = parse_int<std::size_t>(k, v); }},
      {"eval_similarity",
       [](TrainConfig& c, auto k, auto v) {
         if (v == "cosine") {
           c.eval_similarity = Similarity::cosine;
         } else if (v == "dot") {
           c.eval_similarity = Similarity::dot;
         } else {
           bad_value(k, v);
         }
       }},
      {"freeze_embeddings", [](TrainConfig& c, auto k, auto v) { c.freeze_embeddings = parse_bool(k, v); }},
      {"use_bias", [](TrainConfig& c, auto k, auto v) { c.use_bias = parse_bool(k, v); }},
      {"mirror_pairs", [](TrainConfig& c, auto k, auto v) { c.mirror_pairs = parse_bool(k, v); }},
      {"symmetric_loss", [](TrainConfig& c, auto k, auto v) { c.symmetric_loss = parse_bool(k, v); }},
      {"precision",
       [](TrainConfig& c, auto k, auto v) {
         if (v == "f64") {
           c.precision = Precision::f64;
         } else if (v == "f32") {
           c.precision = Precision::f32;
         } else {
           bad_value(k, v);
         }
       }},
      {"lowercase", [](TrainConfig& c, auto k, auto v) { c.lowercase = parse_bool(k, v); }},
      {"dev_eval_k", [](TrainConfig& c, auto k, auto v) { c.dev_eval_k = parse_int<std::size_t>(k, v); }},
      {"threads", [](TrainConfig& c, auto k, auto v) { c.threads = parse_int<std::size_t>(k, v); }},
  };
  return table;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string_view to_string(Similarity s) { return s == Similarity::cosine ? "cosine" : "dot"; }
std::string_view to_string(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(config, key, value);
}

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (c.hidden_dim == 0 || c.embed_dim == 0) fail("dimensions must be positive");
  if (!(c.lr >= 0.0)) fail("lr must be nonnegative");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (!(c.clip_norm > 0.0)) fail("clip_norm must be positive");
  if (c.k_contrasts == 0) fail("k_contrasts must be at least 1");
  if (!(c.margin > 0.0)) fail("margin must be positive");
  if (c.early_stop_patience == 0) fail("early_stop_patience must be at least 1");
  if (c.dev_eval_k == 0) fail("dev_eval_k must be at least 1");
  if (c.threads == 0) fail("threads must be at least 1");
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  return {
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"lr", format_double(c.lr)},
      {"batch_size", std::to_string(c.batch_size)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"dropout_rate", format_double(c.dropout_rate)},
      {"clip_norm", format_double(c.clip_norm)},
      {"k_contrasts", std::to_string(c.k_contrasts)},
      {"margin", format_double(c.margin)},
      {"seed", std::to_string(c.seed)},
      {"early_stop_patience", std::to_string(c.early_stop_patience)},
      {"eval_similarity", std::string(to_string(c.eval_similarity))},
      {"freeze_embeddings", bool_str(c.freeze_embeddings)},
      {"use_bias", bool_str(c.use_bias)},
      {"mirror_pairs", bool_str(c.mirror_pairs)},
      {"symmetric_loss", bool_str(c.symmetric_loss)},
      {"precision", std::string(to_string(c.precision))},
      {"lowercase", bool_str(c.lowercase)},
      {"dev_eval_k", std::to_string(c.dev_eval_k)},
      {"threads", std::to_string(c.threads)},
  };
}

std::string serialize_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + "=" + v + "\n";
  return out;
}

void apply_config_text(TrainConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  apply_config_text(config, text);
}

}  // namespace pgru
