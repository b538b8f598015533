#include "pgru/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgru/checkpoint.hpp"
#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/error.hpp"
#include "pgru/evaluation.hpp"
#include "pgru/gradcheck.hpp"
#include "pgru/manifest.hpp"
#include "pgru/training.hpp"

namespace pgru {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Argument bundles, one per subcommand.

struct PrepareArgs {
  std::string ppdb;
  std::string embeddings;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool no_lowercase = false;
};

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> sets;  // key=value overrides
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool deterministic = false;
  CLI::Option* k_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

struct TrainArgs {
  ConfigArgs cfg;
  std::string data_dir;
  std::string task_train;
  std::string task_file;
  std::string dev_file;
  std::string embeddings;
  std::string out;
  std::string metrics;
  double fraction = 1.0;
};

struct EvalArgs {
  std::string ckpt;
  std::string baseline;
  std::string task;
  std::vector<std::string> data;
  std::string embeddings;
  std::size_t k = 99;
  std::uint64_t seed = 1;
  std::string out;
  std::string similarity;
  std::string oov = "skip";
};

struct EmbedArgs {
  std::string ckpt;
  std::string embeddings;
  std::string phrases;
  std::string out;
};

struct GradcheckArgs {
  GradcheckOptions options;
};

struct SweepArgs {
  ConfigArgs cfg;
  std::string data_dir;
  std::string embeddings;
  std::vector<double> fractions = {0.01, 0.1, 1.0};
  std::vector<std::size_t> ks = {9, 29, 99};
  std::size_t eval_k = 99;
  std::string out;
};

// ---------------------------------------------------------------------------

std::vector<std::string> args_vector(int argc, const char* const* argv) {
  return std::vector<std::string>(argv, argv + argc);
}

std::vector<std::string> nonblank_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos) {
      const auto last = line.find_last_not_of(" \t");
      lines.push_back(line.substr(first, last - first + 1));
    }
    start = end + 1;
  }
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

void add_config_options(CLI::App* cmd, ConfigArgs& cfg) {
  cmd->add_option("--config", cfg.config_file, "Flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", cfg.sets, "Override one config key (key=value); repeatable");
  cfg.k_opt = cmd->add_option("--k", cfg.k, "Contrast phrases per training pair");
  cfg.seed_opt = cmd->add_option("--seed", cfg.seed, "Run seed");
  cfg.threads_opt = cmd->add_option("--threads", cfg.threads, "Worker threads for batch gradients");
  cmd->add_flag("--deterministic", cfg.deterministic,
                "Single-threaded, wall-clock-free run with bit-reproducible outputs");
}

// Defaults, then the config file, then flags. embed_dim is left at 0 unless
// the file sets it, so the embedding file can supply it.
TrainConfig resolve_config(const ConfigArgs& cfg) {
  TrainConfig config;
  config.embed_dim = 0;
  if (!cfg.config_file.empty()) apply_config_file(config, cfg.config_file);
  for (const auto& kv : cfg.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    set_config_value(config, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (cfg.k_opt->count() > 0) config.k_contrasts = cfg.k;
  if (cfg.seed_opt->count() > 0) config.seed = cfg.seed;
  if (cfg.threads_opt->count() > 0) config.threads = cfg.threads;
  if (cfg.deterministic) config.threads = 1;
  return config;
}

EmbeddingTable load_table_for(TrainConfig& config, const std::string& path) {
  EmbeddingTable table = load_embeddings(path, std::nullopt, config.lowercase);
  if (config.embed_dim == 0) {
    config.embed_dim = table.dim();
  } else if (config.embed_dim != table.dim()) {
    throw ConfigError("config embed_dim is " + std::to_string(config.embed_dim) +
                      " but " + path + " holds " + std::to_string(table.dim()) + "-dim vectors");
  }
  validate(config);
  return table;
}

RunManifest start_manifest(const std::string& command, int argc, const char* const* argv,
                           const TrainConfig& config, const std::vector<std::string>& inputs) {
  RunManifest m;
  m.command = command;
  m.argv = args_vector(argc, argv);
  m.config = config;
  m.seed = config.seed;
  m.started_at = utc_timestamp();
  for (const auto& in : inputs) {
    if (!in.empty()) m.input_digests.emplace_back(in, file_digest(in));
  }
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& path) {
  m.finished_at = utc_timestamp();
  write_manifest(path, m);
}

// ---------------------------------------------------------------------------

int cmd_prepare(const PrepareArgs& a, int argc, const char* const* argv, std::ostream& out) {
  TrainConfig config;
  config.lowercase = !a.no_lowercase;
  config.seed = a.seed;
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  RunManifest manifest = start_manifest("prepare", argc, argv, config, {a.ppdb, a.embeddings});
  write_manifest(dir / "manifest.txt", manifest);

  const EmbeddingTable table = load_embeddings(a.embeddings, std::nullopt, config.lowercase);
  const std::string text = read_text_file(a.ppdb);
  std::vector<ParaphrasePair> raw;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const PpdbRecord rec = parse_ppdb_line(line);
      raw.push_back({rec.phrase, rec.paraphrase});
    } catch (const FormatError& e) {
      throw FormatError(a.ppdb + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  const FilterResult filtered = filter_pairs(raw, table);
  SplitSpec spec;
  spec.seed = a.seed;
  const DatasetSplit split = split_dataset(filtered.kept, spec);
  write_pairs_tsv(dir / "pairs.tsv", filtered.kept);
  write_pairs_tsv(dir / "train.tsv", split.train);
  write_pairs_tsv(dir / "dev.tsv", split.dev);
  write_pairs_tsv(dir / "test.tsv", split.test);

  const FilterReport& r = filtered.report;
  write_text(dir / "filter_report.tsv",
             "rule\tcount\ninput\t" + std::to_string(r.input) + "\nidentical\t" +
                 std::to_string(r.identical) + "\nnon_letter\t" + std::to_string(r.non_letter) +
                 "\nout_of_vocab\t" + std::to_string(r.out_of_vocab) + "\nsingle_words\t" +
                 std::to_string(r.single_words) + "\nduplicate\t" + std::to_string(r.duplicate) +
                 "\nkept\t" + std::to_string(r.kept) + "\n");
  finish_manifest(manifest, dir / "manifest.txt");
  out << "kept " << r.kept << " of " << r.input << " pairs; train " << split.train.size()
      << ", dev " << split.dev.size() << ", test " << split.test.size() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, int argc, const char* const* argv, std::ostream& out,
              std::ostream& err) {
  if (a.data_dir.empty() == a.task_train.empty()) {
    throw UsageError("train needs exactly one of --data DIR or --task-train {semeval,turney}");
  }
  if (!a.task_train.empty() && a.task_file.empty()) {
    throw UsageError("--task-train needs --task-file");
  }
  TrainConfig config = resolve_config(a.cfg);
  EmbeddingTable table = load_table_for(config, a.embeddings);

  std::vector<ParaphrasePair> train_pairs;
  std::vector<ParaphrasePair> dev_pairs;
  TrainOptions options;
  options.record_wall_time = !a.cfg.deterministic;
  std::vector<std::string> inputs = {a.embeddings, a.cfg.config_file};

  // Task data must outlive the dev-metric closure.
  std::vector<SemEvalExample> semeval_train, semeval_dev;
  std::vector<TurneyExample> turney_train, turney_dev;
  const Similarity sim = config.eval_similarity;

  if (!a.data_dir.empty()) {
    const fs::path dir(a.data_dir);
    train_pairs = read_pairs_tsv(dir / "train.tsv");
    dev_pairs = read_pairs_tsv(dir / "dev.tsv");
    inputs.push_back((dir / "train.tsv").string());
    inputs.push_back((dir / "dev.tsv").string());
  } else if (a.task_train == "semeval") {
    semeval_train = load_semeval(a.task_file);
    semeval_dev = a.dev_file.empty() ? semeval_train : load_semeval(a.dev_file);
    train_pairs = semeval_training_pairs(semeval_train, table);
    options.dev_metric = [&](const GruParams& params, const EmbeddingTable& t) {
      GruEncoder encoder(params, t);
      return semeval_evaluate(encoder, semeval_train, semeval_dev, {sim, OovPolicy::skip}).accuracy;
    };
    inputs.push_back(a.task_file);
    inputs.push_back(a.dev_file);
  } else if (a.task_train == "turney") {
    turney_train = load_turney(a.task_file);
    turney_dev = a.dev_file.empty() ? turney_train : load_turney(a.dev_file);
    TurneyTrainingData data = turney_training_data(turney_train, table);
    train_pairs = std::move(data.pairs);
    options.fixed_contrasts = std::move(data.fixed_contrasts);
    options.dev_metric = [&](const GruParams& params, const EmbeddingTable& t) {
      GruEncoder encoder(params, t);
      return turney5_evaluate(encoder, turney_dev, {sim, OovPolicy::skip}).accuracy;
    };
    inputs.push_back(a.task_file);
    inputs.push_back(a.dev_file);
  } else {
    throw UsageError("--task-train must be semeval or turney");
  }

  if (a.fraction != 1.0) {
    if (!options.fixed_contrasts.empty()) throw UsageError("--fraction applies to --data runs only");
    train_pairs = subsample_training(train_pairs, a.fraction, SeededRng::mix(config.seed, {0x5757}));
  }

  const fs::path ckpt_path(a.out);
  const fs::path metrics_path = a.metrics.empty() ? fs::path(a.out + ".metrics.tsv") : fs::path(a.metrics);
  RunManifest manifest = start_manifest("train", argc, argv, config, inputs);
  write_manifest(a.out + ".manifest", manifest);

  options.on_epoch = [&](const EpochLog& log) {
    err << "epoch " << log.epoch << " loss " << format_double(log.train_loss) << " dev "
        << format_double(log.dev_accuracy) << " clip_rate " << format_double(log.clip_rate) << "\n";
  };
  const TrainResult result = train(config, train_pairs, dev_pairs, table, options);
  save_checkpoint(result.checkpoint, ckpt_path);
  write_metrics_tsv(metrics_path, result.logs);
  finish_manifest(manifest, a.out + ".manifest");
  out << "trained " << result.logs.size() << " epochs on " << train_pairs.size()
      << " pairs; best epoch " << result.checkpoint.epoch << " dev "
      << format_double(result.checkpoint.best_dev_metric) << "\n";
  return kExitOk;
}

// Owns whatever an encoder refers to; filled in place because the encoder
// holds references into the other members.
struct LoadedEncoder {
  LoadedEncoder() = default;
  LoadedEncoder(const LoadedEncoder&) = delete;
  LoadedEncoder& operator=(const LoadedEncoder&) = delete;

  std::optional<Checkpoint> ckpt;
  EmbeddingTable table;
  std::unique_ptr<Encoder> encoder;
  TrainConfig config;
};

void load_checkpoint_encoder(LoadedEncoder& le, const std::string& ckpt_path,
                             const std::string& emb_path) {
  le.ckpt = load_checkpoint(ckpt_path);
  le.config = le.ckpt->config;
  if (emb_path.empty()) throw UsageError("--embeddings is required with --ckpt");
  const EmbeddingTable base = load_embeddings(emb_path, std::nullopt, le.config.lowercase);
  if (base.dim() != le.config.embed_dim) {
    throw ConfigError("checkpoint expects embed_dim " + std::to_string(le.config.embed_dim) +
                      " but " + emb_path + " holds " + std::to_string(base.dim()) + "-dim vectors");
  }
  le.table = apply_embedding_delta(base, *le.ckpt);
  le.encoder = std::make_unique<GruEncoder>(le.ckpt->params, le.table);
}

int cmd_eval(const EvalArgs& a, int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  if (a.ckpt.empty() == a.baseline.empty()) throw UsageError("eval needs exactly one of --ckpt or --baseline");
  LoadedEncoder le;
  if (!a.ckpt.empty()) {
    load_checkpoint_encoder(le, a.ckpt, a.embeddings);
  } else if (a.baseline == "random") {
    le.encoder = std::make_unique<RandomEncoder>(a.seed);
  } else {
    if (a.embeddings.empty()) throw UsageError("--embeddings is required for the " + a.baseline + " baseline");
    le.table = load_embeddings(a.embeddings, std::nullopt, true);
    if (a.baseline == "avg") {
      le.encoder = std::make_unique<AvgEncoder>(le.table);
    } else {
      le.encoder = std::make_unique<SumEncoder>(le.table);
    }
  }
  EvalOptions options;
  options.similarity = le.config.eval_similarity;
  if (a.similarity == "dot") options.similarity = Similarity::dot;
  if (a.similarity == "cosine") options.similarity = Similarity::cosine;
  options.oov = a.oov == "drop" ? OovPolicy::drop : OovPolicy::skip;

  TrainConfig manifest_config = le.config;
  manifest_config.seed = a.seed;
  std::vector<std::string> inputs = {a.ckpt, a.embeddings};
  inputs.insert(inputs.end(), a.data.begin(), a.data.end());
  RunManifest manifest = start_manifest("eval", argc, argv, manifest_config, inputs);
  if (!a.out.empty()) write_manifest(a.out + ".manifest", manifest);

  auto expect_paths = [&](std::size_t n) {
    if (a.data.size() != n) {
      throw UsageError("--task " + a.task + " takes " + std::to_string(n) + " --data path(s), got " +
                       std::to_string(a.data.size()));
    }
  };
  TaskReportRow row;
  row.task = a.task;
  row.encoder = le.encoder->name();
  if (a.task == "ranking") {
    expect_paths(1);
    const auto pairs = read_pairs_tsv(a.data[0]);
    const auto pool = phrase_pool(pairs);
    const RankingResult r = ranking_accuracy(*le.encoder, pairs, pool, a.k, a.seed, options);
    row.k = r.k;
    row.n = r.n_examples;
    row.oov_skipped = r.oov_skipped;
    row.accuracy = r.accuracy;
  } else if (a.task == "semeval") {
    expect_paths(2);
    const auto train = load_semeval(a.data[0]);
    const auto eval = load_semeval(a.data[1]);
    const SemEvalResult r = semeval_evaluate(*le.encoder, train, eval, options);
    err << "threshold " << format_double(r.threshold) << " train_accuracy "
        << format_double(r.train_accuracy) << "\n";
    row.n = r.n_examples;
    row.oov_skipped = r.oov_skipped;
    row.accuracy = r.accuracy;
  } else {
    expect_paths(1);
    const auto examples = load_turney(a.data[0]);
    const ChoiceResult r = a.task == "turney5" ? turney5_evaluate(*le.encoder, examples, options)
                                               : turney10_evaluate(*le.encoder, examples, options);
    row.k = a.task == "turney5" ? 5 : 10;
    row.n = r.n_examples;
    row.oov_skipped = r.oov_skipped;
    row.accuracy = r.accuracy;
  }

  const TaskReportRow rows[] = {row};
  if (a.out.empty()) {
    out << report_tsv(rows);
  } else {
    write_text(a.out, report_tsv(rows));
    out << report_table(rows);
    finish_manifest(manifest, a.out + ".manifest");
  }
  return kExitOk;
}

int cmd_embed(const EmbedArgs& a, int argc, const char* const* argv, std::ostream& out) {
  const std::vector<std::string> phrases = nonblank_lines(read_text_file(a.phrases));
  if (phrases.empty()) throw UsageError(a.phrases + " contains no phrases");
  LoadedEncoder le;
  load_checkpoint_encoder(le, a.ckpt, a.embeddings);
  RunManifest manifest = start_manifest("embed", argc, argv, le.config, {a.ckpt, a.embeddings, a.phrases});
  write_manifest(a.out + ".manifest", manifest);

  std::string body;
  std::string oov;
  std::size_t written = 0;
  for (const auto& phrase : phrases) {
    const auto tokens = resolve_phrase(*le.encoder, phrase, OovPolicy::skip);
    if (!tokens) {
      std::string missing;
      for (const auto& t : tokenize(le.encoder->normalize(phrase))) {
        if (!le.encoder->covers(t)) missing += (missing.empty() ? "" : " ") + t;
      }
      oov += phrase + "\tout-of-vocabulary: " + missing + "\n";
      continue;
    }
    const DenseVector v = le.encoder->encode(*tokens);
    body += join_tokens(*tokens, '_');
    body += '\t';
    for (std::size_t i = 0; i < v.dim(); ++i) {
      if (i > 0) body += ' ';
      body += format_double(v[i]);
    }
    body += '\n';
    ++written;
  }
  write_text(a.out, body);
  write_text(a.out + ".oov", oov);
  finish_manifest(manifest, a.out + ".manifest");
  out << "embedded " << written << " of " << phrases.size() << " phrases\n";
  return kExitOk;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  if (a.options.dims == 0 || a.options.len == 0) throw UsageError("--dims and --len must be positive");
  const GradcheckReport report = run_gradcheck(a.options);
  out << "component\tworst_rel_error\tthreshold\tcoordinates\tworst_at\tstatus\n";
  for (const auto& c : report.components) {
    out << c.name << '\t' << format_double(c.worst_relative_error) << '\t'
        << format_double(c.threshold) << '\t' << c.coordinates_checked << '\t'
        << c.worst_coordinate << '\t' << (c.passed() ? "PASS" : "FAIL") << '\n';
  }
  for (const auto& c : report.components) {
    if (!c.passed()) {
      err << "gradient check failed: " << c.name << " at " << c.worst_coordinate
          << " (relative error " << format_double(c.worst_relative_error) << ")\n";
    }
  }
  return report.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const SweepArgs& a, int argc, const char* const* argv, std::ostream& out,
              std::ostream& err) {
  TrainConfig config = resolve_config(a.cfg);
  const EmbeddingTable table = load_table_for(config, a.embeddings);
  const fs::path dir(a.data_dir);
  const auto train_pairs = read_pairs_tsv(dir / "train.tsv");
  const auto dev_pairs = read_pairs_tsv(dir / "dev.tsv");
  const auto test_pairs = read_pairs_tsv(dir / "test.tsv");
  RunManifest manifest = start_manifest(
      "sweep", argc, argv, config,
      {a.embeddings, a.cfg.config_file, (dir / "train.tsv").string(), (dir / "dev.tsv").string(),
       (dir / "test.tsv").string()});
  if (!a.out.empty()) write_manifest(a.out + ".manifest", manifest);

  const auto cells = sweep(config, train_pairs, dev_pairs, test_pairs, table, a.fractions, a.ks,
                           a.eval_k, {config.eval_similarity, OovPolicy::skip});
  std::string tsv = "fraction\tk\tseed\ttrain_size\tbest_dev\ttest_accuracy\tn\toov_skipped\n";
  for (const auto& c : cells) {
    tsv += format_double(c.fraction) + '\t' + std::to_string(c.k) + '\t' + std::to_string(c.seed) +
           '\t' + std::to_string(c.train_size) + '\t' + format_double(c.best_dev) + '\t' +
           format_double(c.test.accuracy) + '\t' + std::to_string(c.test.n_examples) + '\t' +
           std::to_string(c.test.oov_skipped) + '\n';
    err << "cell fraction " << format_double(c.fraction) << " k " << c.k << " test "
        << format_double(c.test.accuracy) << "\n";
  }
  if (a.out.empty()) {
    out << tsv;
  } else {
    write_text(a.out, tsv);
    finish_manifest(manifest, a.out + ".manifest");
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compositional phrase embeddings learned from paraphrase pairs with a GRU encoder",
               "pgru"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* sp = app.add_subcommand("prepare", "Filter PPDB pairs and split train/dev/test");
  sp->add_option("--ppdb", prepare.ppdb, "PPDB package file")->required();
  sp->add_option("--embeddings", prepare.embeddings, "Word vectors (text format)")->required();
  sp->add_option("--out", prepare.out_dir, "Output directory")->required();
  sp->add_option("--seed", prepare.seed, "Split seed");
  sp->add_flag("--no-lowercase", prepare.no_lowercase, "Keep case when matching the vocabulary");

  TrainArgs train_args;
  auto* st = app.add_subcommand("train", "Train the GRU encoder");
  st->add_option("--data", train_args.data_dir, "Directory written by prepare");
  st->add_option("--task-train", train_args.task_train, "Train on a task's training file instead")
      ->check(CLI::IsMember({"semeval", "turney"}));
  st->add_option("--task-file", train_args.task_file, "Task training file");
  st->add_option("--dev-file", train_args.dev_file, "Task file for model selection (default: the training file)");
  st->add_option("--embeddings", train_args.embeddings, "Word vectors (text format)")->required();
  st->add_option("--out", train_args.out, "Checkpoint path")->required();
  st->add_option("--metrics", train_args.metrics, "Metrics TSV (default: <out>.metrics.tsv)");
  st->add_option("--fraction", train_args.fraction, "Fraction of the training split to use");
  add_config_options(st, train_args.cfg);

  EvalArgs eval;
  auto* se = app.add_subcommand("eval", "Evaluate a checkpoint or baseline on a task");
  se->add_option("--ckpt", eval.ckpt, "Checkpoint");
  se->add_option("--baseline", eval.baseline, "Baseline encoder")->check(CLI::IsMember({"avg", "sum", "random"}));
  se->add_option("--task", eval.task, "Task")
      ->required()
      ->check(CLI::IsMember({"ranking", "semeval", "turney5", "turney10"}));
  se->add_option("--data", eval.data, "Task data: pairs TSV | semeval train+eval | turney file")->required();
  se->add_option("--embeddings", eval.embeddings, "Word vectors (text format)");
  se->add_option("--k", eval.k, "Ranking contrasts");
  se->add_option("--seed", eval.seed, "Evaluation seed");
  se->add_option("--out", eval.out, "Report TSV path (default: stdout)");
  se->add_option("--similarity", eval.similarity, "Similarity")->check(CLI::IsMember({"cosine", "dot"}));
  se->add_option("--oov", eval.oov, "OOV policy")->check(CLI::IsMember({"skip", "drop"}));

  EmbedArgs embed;
  auto* sm = app.add_subcommand("embed", "Export phrase embeddings");
  sm->add_option("--ckpt", embed.ckpt, "Checkpoint")->required();
  sm->add_option("--embeddings", embed.embeddings, "Word vectors (text format)")->required();
  sm->add_option("--phrases", embed.phrases, "One phrase per line")->required();
  sm->add_option("--out", embed.out, "Output vectors; OOV report goes to <out>.oov")->required();

  GradcheckArgs gradcheck;
  auto* sg = app.add_subcommand("gradcheck", "Finite-difference check of all analytic gradients");
  sg->add_option("--seed", gradcheck.options.seed, "Seed");
  sg->add_option("--dims", gradcheck.options.dims, "Maximum input/hidden size");
  sg->add_option("--len", gradcheck.options.len, "Maximum sequence length");
  sg->add_option("--instances", gradcheck.options.instances, "Random instances per component");

  SweepArgs sweep_args;
  auto* sw = app.add_subcommand("sweep", "Train and rank over training fractions x k");
  sw->add_option("--data", sweep_args.data_dir, "Directory written by prepare")->required();
  sw->add_option("--embeddings", sweep_args.embeddings, "Word vectors (text format)")->required();
  sw->add_option("--fractions", sweep_args.fractions, "Training fractions");
  sw->add_option("--ks", sweep_args.ks, "Training contrast counts");
  sw->add_option("--eval-k", sweep_args.eval_k, "Ranking contrasts at test time");
  sw->add_option("--out", sweep_args.out, "Result TSV (default: stdout)");
  add_config_options(sw, sweep_args.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sp) return cmd_prepare(prepare, argc, argv, out);
    if (*st) return cmd_train(train_args, argc, argv, out, err);
    if (*se) return cmd_eval(eval, argc, argv, out, err);
    if (*sm) return cmd_embed(embed, argc, argv, out);
    if (*sg) return cmd_gradcheck(gradcheck, out, err);
    if (*sw) return cmd_sweep(sweep_args, argc, argv, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "data format error: " << e.what() << "\n";
    return kExitDataFormat;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DegenerateVectorError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const EvaluationError& e) {
    err << "evaluation error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace pgru
