#include "pgru/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "pgru/error.hpp"

namespace pgru {

namespace {

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_exact(std::string_view text, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + delim.size();
  }
}

// Iterates lines, stripping a trailing CR; `fn(line, line_number)`.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, ++line_no);
    start = end + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void format_error(std::size_t line_no, const std::string& what) {
  throw FormatError("line " + std::to_string(line_no) + ": " + what);
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

template <class Fn>
auto with_path_context(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

// ---------------------------------------------------------------------------

bool EmbeddingTable::add(std::string word, const DenseVector& vec) {
  if (vec.dim() != dim_) {
    throw InvalidArgument("vector for '" + word + "' has " + std::to_string(vec.dim()) +
                          " entries, table dim is " + std::to_string(dim_));
  }
  if (word.empty() || word.find_first_of(" \t\n") != std::string::npos) {
    throw InvalidArgument("embedding words must be nonempty and whitespace-free");
  }
  if (index_.contains(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  values_.insert(values_.end(), vec.values().begin(), vec.values().end());
  return true;
}

bool EmbeddingTable::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DenseVector EmbeddingTable::vector(std::size_t index) const {
  auto r = row(index);
  return DenseVector(std::vector<double>(r.begin(), r.end()));
}

DenseVector EmbeddingTable::lookup(std::string_view word) const {
  auto idx = index_of(word);
  if (!idx) throw InvalidArgument("word not in embedding table: " + std::string(word));
  return vector(*idx);
}

std::span<double> EmbeddingTable::row(std::size_t index) {
  return std::span<double>(values_).subspan(index * dim_, dim_);
}

std::span<const double> EmbeddingTable::row(std::size_t index) const {
  return std::span<const double>(values_).subspan(index * dim_, dim_);
}

std::string EmbeddingTable::normalize(std::string_view text) const {
  return lowercase_ ? to_lower_ascii(text) : std::string(text);
}

std::vector<DenseVector> EmbeddingTable::vectors_for(std::span<const std::string> tokens) const {
  std::vector<DenseVector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

EmbeddingTable parse_embeddings(std::string_view text, std::optional<std::size_t> expected_dim,
                                bool lowercase, EmbeddingLoadReport* report) {
  EmbeddingLoadReport local;
  std::optional<std::size_t> dim = expected_dim;
  std::optional<std::size_t> header_dim;
  EmbeddingTable table;
  bool first_content = true;

  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto fields = split_whitespace(line);
    if (fields.empty()) return;
    ++local.lines;
    if (first_content) {
      first_content = false;
      std::size_t vocab = 0, hdim = 0;
      if (fields.size() == 2 && parse_size(fields[0], vocab) && parse_size(fields[1], hdim)) {
        local.had_header = true;
        header_dim = hdim;
        if (dim && *dim != hdim) {
          format_error(line_no, "header declares dim " + std::to_string(hdim) + ", expected " +
                                    std::to_string(*dim));
        }
        dim = hdim;
        return;
      }
    }
    if (fields.size() < 2) format_error(line_no, "expected a word followed by its vector");
    const std::size_t line_dim = fields.size() - 1;
    if (!dim) dim = line_dim;
    if (line_dim != *dim) {
      format_error(line_no, "vector has " + std::to_string(line_dim) + " entries, expected " +
                                std::to_string(*dim));
    }
    if (table.dim() == 0) table = EmbeddingTable(*dim, lowercase);
    DenseVector vec(*dim);
    for (std::size_t i = 0; i < *dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i])) {
        format_error(line_no, "cannot parse value '" + std::string(fields[i + 1]) + "'");
      }
    }
    std::string word = lowercase ? to_lower_ascii(fields[0]) : std::string(fields[0]);
    if (!table.add(std::move(word), vec)) ++local.duplicates;
  });

  if (table.dim() == 0) {
    if (!dim || *dim == 0) throw FormatError("embedding file contains no vectors");
    table = EmbeddingTable(*dim, lowercase);
  }
  if (report != nullptr) *report = local;
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim, bool lowercase,
                               EmbeddingLoadReport* report) {
  return with_path_context(path, [&](const std::string& text) {
    return parse_embeddings(text, expected_dim, lowercase, report);
  });
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

TokenSeq tokenize(std::string_view phrase) {
  TokenSeq out;
  for (auto f : split_whitespace(phrase)) out.emplace_back(f);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens, char sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

PpdbRecord parse_ppdb_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) throw FormatError("empty PPDB line");
  auto fields = split_exact(line, " ||| ");
  if (fields.size() < 3) {
    throw FormatError("PPDB line has " + std::to_string(fields.size()) +
                      " fields, expected at least 3");
  }
  PpdbRecord rec;
  rec.lhs_label = std::string(fields[0]);
  rec.phrase = std::string(fields[1]);
  rec.paraphrase = std::string(fields[2]);
  if (fields.size() > 3) rec.raw_features = std::string(fields[3]);
  for (std::size_t i = 4; i < fields.size(); ++i) {
    if (i > 4) rec.remainder += " ||| ";
    rec.remainder += fields[i];
  }
  return rec;
}

bool letters_and_spaces_only(std::string_view text) {
  if (text.empty() || text.front() == ' ' || text.back() == ' ') return false;
  bool prev_space = false;
  for (char ch : text) {
    if (ch == ' ') {
      if (prev_space) return false;
      prev_space = true;
      continue;
    }
    prev_space = false;
    const bool letter = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
    if (!letter) return false;
  }
  return true;
}

FilterResult filter_pairs(std::span<const ParaphrasePair> pairs, const EmbeddingTable& vocab) {
  FilterResult out;
  out.report.input = pairs.size();
  std::unordered_set<std::string> seen;
  auto all_in_vocab = [&](const std::string& phrase) {
    for (const auto& w : tokenize(phrase)) {
      if (!vocab.contains(w)) return false;
    }
    return true;
  };

  for (const auto& raw : pairs) {
    ParaphrasePair pair{vocab.normalize(raw.p1), vocab.normalize(raw.p2)};
    if (pair.p1 == pair.p2) {
      ++out.report.identical;
      continue;
    }
    if (!letters_and_spaces_only(pair.p1) || !letters_and_spaces_only(pair.p2)) {
      ++out.report.non_letter;
      continue;
    }
    if (!all_in_vocab(pair.p1) || !all_in_vocab(pair.p2)) {
      ++out.report.out_of_vocab;
      continue;
    }
    if (pair.p1.find(' ') == std::string::npos && pair.p2.find(' ') == std::string::npos) {
      ++out.report.single_words;
      continue;
    }
    if (seen.contains(pair.p1 + '\t' + pair.p2) || seen.contains(pair.p2 + '\t' + pair.p1)) {
      ++out.report.duplicate;
      continue;
    }
    seen.insert(pair.p1 + '\t' + pair.p2);
    out.kept.push_back(std::move(pair));
  }
  out.report.kept = out.kept.size();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SeededRng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

// floor(n * f), nudged so products like 406170 * 0.1 land on the exact integer.
std::size_t fraction_of(std::size_t n, double f) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f * (1.0 + 1e-12)));
}

}  // namespace

DatasetSplit split_dataset(std::span<const ParaphrasePair> pairs, const SplitSpec& spec) {
  if (pairs.empty()) throw InvalidArgument("cannot split an empty dataset");
  if (spec.train_fraction < 0 || spec.dev_fraction < 0 || spec.test_fraction < 0 ||
      std::abs(spec.train_fraction + spec.dev_fraction + spec.test_fraction - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must be nonnegative and sum to 1");
  }
  const std::size_t n = pairs.size();
  const std::size_t n_dev = fraction_of(n, spec.dev_fraction);
  const std::size_t n_test = fraction_of(n, spec.test_fraction);
  const std::size_t n_train = n - n_dev - n_test;
  auto order = shuffled_indices(n, spec.seed);

  DatasetSplit split;
  split.train.reserve(n_train);
  split.dev.reserve(n_dev);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pair = pairs[order[i]];
    if (i < n_train) {
      split.train.push_back(pair);
    } else if (i < n_train + n_dev) {
      split.dev.push_back(pair);
    } else {
      split.test.push_back(pair);
    }
  }
  return split;
}

std::vector<ParaphrasePair> subsample_training(std::span<const ParaphrasePair> train,
                                               double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("training fraction must lie in (0, 1]");
  }
  const std::size_t m = fraction == 1.0 ? train.size() : fraction_of(train.size(), fraction);
  if (m == 0) throw InvalidArgument("training subsample is empty");
  auto order = shuffled_indices(train.size(), seed);
  order.resize(m);
  std::sort(order.begin(), order.end());
  std::vector<ParaphrasePair> out;
  out.reserve(m);
  for (std::size_t i : order) out.push_back(train[i]);
  return out;
}

std::vector<std::string> phrase_pool(std::span<const ParaphrasePair> pairs) {
  std::vector<std::string> pool;
  std::unordered_set<std::string> seen;
  for (const auto& p : pairs) {
    for (const auto* phrase : {&p.p1, &p.p2}) {
      if (seen.insert(*phrase).second) pool.push_back(*phrase);
    }
  }
  return pool;
}

std::vector<ParaphrasePair> read_pairs_tsv(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& text) {
    std::vector<ParaphrasePair> pairs;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
      if (line.empty()) return;
      auto fields = split_exact(line, "\t");
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        format_error(line_no, "expected \"p1<TAB>p2\"");
      }
      pairs.push_back({std::string(fields[0]), std::string(fields[1])});
    });
    return pairs;
  });
}

void write_pairs_tsv(const std::filesystem::path& path, std::span<const ParaphrasePair> pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (const auto& p : pairs) out << p.p1 << '\t' << p.p2 << '\n';
}

// ---------------------------------------------------------------------------

std::vector<SemEvalExample> parse_semeval(std::string_view text) {
  std::vector<SemEvalExample> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    auto fields = split_exact(line, "\t");
    if (fields.size() != 3) {
      format_error(line_no, "SemEval row needs 3 tab-separated fields, got " +
                                std::to_string(fields.size()));
    }
    SemEvalExample ex{trim(fields[0]), trim(fields[1]), false};
    if (ex.phrase_a.empty() || ex.phrase_b.empty()) format_error(line_no, "empty phrase");
    const std::string label = trim(fields[2]);
    if (label == "1") {
      ex.label = true;
    } else if (label != "0") {
      format_error(line_no, "label must be 1 or 0, got '" + label + "'");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<SemEvalExample> load_semeval(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& text) { return parse_semeval(text); });
}

std::vector<TurneyExample> parse_turney(std::string_view text) {
  std::vector<TurneyExample> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    auto fields = split_exact(line, "\t");
    if (fields.size() != 7) {
      format_error(line_no, "Turney row needs a bigram, 5 candidates and an answer index; got " +
                                std::to_string(fields.size()) + " fields");
    }
    TurneyExample ex;
    ex.bigram = trim(fields[0]);
    if (tokenize(ex.bigram).size() != 2) format_error(line_no, "bigram must have exactly two words");
    for (std::size_t i = 1; i <= 5; ++i) {
      std::string cand = trim(fields[i]);
      if (cand.empty()) format_error(line_no, "empty candidate");
      if (std::find(ex.candidates.begin(), ex.candidates.end(), cand) != ex.candidates.end()) {
        format_error(line_no, "duplicate candidate '" + cand + "'");
      }
      ex.candidates.push_back(std::move(cand));
    }
    const std::string answer = trim(fields[6]);
    if (!parse_size(answer, ex.answer_index) || ex.answer_index > 4) {
      format_error(line_no, "answer index must be 0..4, got '" + answer + "'");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<TurneyExample> load_turney(const std::filesystem::path& path) {
  return with_path_context(path, [](const std::string& text) { return parse_turney(text); });
}

std::vector<Turney10Item> build_turney10(const TurneyExample& example) {
  const auto words = tokenize(example.bigram);
  const std::string original = join_tokens(words);
  std::string reversed = original;
  if (words.size() == 2) reversed = words[1] + " " + words[0];
  std::vector<Turney10Item> items;
  items.reserve(10);
  for (int orientation = 0; orientation < 2; ++orientation) {
    const std::string& side = orientation == 0 ? original : reversed;
    for (std::size_t i = 0; i < example.candidates.size(); ++i) {
      items.push_back(Turney10Item{side, example.candidates[i],
                                   orientation == 0 && i == example.answer_index});
    }
  }
  return items;
}

}  // namespace pgru
