#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "pgru/checkpoint.hpp"
#include "pgru/cli.hpp"
#include "pgru/config.hpp"
#include "pgru/data.hpp"
#include "pgru/evaluation.hpp"
#include "pgru/training.hpp"
#include "support/fixtures.hpp"

using namespace pgru;
using namespace pgru::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pgru");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int exit_status(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Fixture corpus on disk: embeddings plus a train/dev/test directory.
struct FixtureFiles {
  fs::path dir;
  fs::path embeddings;
  fs::path data;
  fs::path config;
};

FixtureFiles fixture_files(const std::string& name) {
  FixtureFiles f;
  f.dir = scratch_dir(name);
  const auto corpus = overfit_fixture();
  f.embeddings = f.dir / "vectors.txt";
  write_embeddings(corpus.table, f.embeddings);
  f.data = f.dir / "data";
  fs::create_directories(f.data);
  write_pairs_tsv(f.data / "train.tsv", corpus.pairs);
  write_pairs_tsv(f.data / "dev.tsv", corpus.pairs);
  write_pairs_tsv(f.data / "test.tsv", corpus.pairs);
  f.config = f.dir / "fixture.conf";
  std::ofstream(f.config) << "hidden_dim = 8\nbatch_size = 8\nmax_epochs = 4\ndropout_rate = 0\n"
                             "dev_eval_k = 9\nearly_stop_patience = 100\n";
  return f;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  const auto f = fixture_files("usage");
  const auto missing = cli({"train", "--embeddings", f.embeddings.string(), "--out", (f.dir / "m.ckpt").string()});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("--data") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("prepare reproduces the golden filter output deterministically") {
  const auto dir = scratch_dir("prepare");
  auto run = [&](const fs::path& out) {
    return cli({"prepare", "--ppdb", fixture_path("ppdb_golden.txt").string(), "--embeddings",
                fixture_path("golden_vocab.txt").string(), "--out", out.string(), "--seed", "3"});
  };
  REQUIRE(run(dir / "a").code == kExitOk);
  REQUIRE(run(dir / "b").code == kExitOk);
  CHECK(slurp(dir / "a" / "pairs.tsv") == slurp(fixture_path("golden_kept.tsv")));
  CHECK(slurp(dir / "a" / "filter_report.tsv") == slurp(fixture_path("golden_filter_report.tsv")));
  for (const char* name : {"pairs.tsv", "train.tsv", "dev.tsv", "test.tsv", "filter_report.tsv"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(read_pairs_tsv(dir / "a" / "train.tsv").size() == 3);
  CHECK(fs::exists(dir / "a" / "manifest.txt"));
}

TEST_CASE("malformed PPDB input is a data-format error with its line") {
  const auto dir = scratch_dir("badppdb");
  std::ofstream(dir / "bad.txt") << "[NP] ||| big dog ||| large dog ||| x\n[NP] ||| broken\n";
  const auto r = cli({"prepare", "--ppdb", (dir / "bad.txt").string(), "--embeddings",
                      fixture_path("golden_vocab.txt").string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitDataFormat);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("deterministic training is bit-reproducible and leaves a replayable manifest") {
  const auto f = fixture_files("train_det");
  auto run = [&](const std::string& tag) {
    return cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
                f.config.string(), "--out", (f.dir / (tag + ".ckpt")).string(), "--seed", "5",
                "--deterministic"});
  };
  REQUIRE(run("a").code == kExitOk);
  REQUIRE(run("b").code == kExitOk);
  CHECK(slurp(f.dir / "a.ckpt") == slurp(f.dir / "b.ckpt"));
  CHECK(slurp(f.dir / "a.ckpt.metrics.tsv") == slurp(f.dir / "b.ckpt.metrics.tsv"));

  // The manifest is itself a config file holding the resolved settings.
  TrainConfig replay;
  apply_config_file(replay, f.dir / "a.ckpt.manifest");
  const Checkpoint ck = load_checkpoint(f.dir / "a.ckpt");
  CHECK(replay == ck.config);
  CHECK(replay.seed == 5);
  CHECK(replay.embed_dim == 8);
  REQUIRE(cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
               (f.dir / "a.ckpt.manifest").string(), "--out", (f.dir / "c.ckpt").string(),
               "--deterministic"})
              .code == kExitOk);
  CHECK(slurp(f.dir / "a.ckpt") == slurp(f.dir / "c.ckpt"));
}

TEST_CASE("config errors: unknown key and flag precedence") {
  const auto f = fixture_files("train_cfg");
  std::ofstream(f.dir / "typo.conf") << "hiden_dim = 8\n";
  const auto typo = cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(),
                         "--config", (f.dir / "typo.conf").string(), "--out", (f.dir / "x.ckpt").string()});
  CHECK(typo.code == kExitUsage);
  CHECK(typo.err.find("hiden_dim") != std::string::npos);

  // --k beats --set beats the config file.
  REQUIRE(cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
               f.config.string(), "--set", "k_contrasts=5", "--set", "max_epochs=1", "--k", "7",
               "--out", (f.dir / "k.ckpt").string()})
              .code == kExitOk);
  const Checkpoint ck = load_checkpoint(f.dir / "k.ckpt");
  CHECK(ck.config.k_contrasts == 7);
  CHECK(ck.config.max_epochs == 1);
}

TEST_CASE("lr = 0 freezes parameters; with fixed contrasts the loss repeats exactly") {
  const auto f = fixture_files("train_lr0");
  std::ofstream(f.dir / "lr0.conf") << "hidden_dim = 8\nbatch_size = 8\nmax_epochs = 4\n"
                                        "dev_eval_k = 9\nearly_stop_patience = 100\nlr = 0\n";
  REQUIRE(cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
               (f.dir / "lr0.conf").string(), "--out", (f.dir / "z.ckpt").string(), "--deterministic"})
              .code == kExitOk);
  const Checkpoint ck = load_checkpoint(f.dir / "z.ckpt");
  SeededRng init = SeededRng::derive(ck.config.seed, {0x1001});
  CHECK(ck.params == GruParams::glorot(8, 8, false, init));

  // Turney training with k = 4: every contrast is a fixed wrong candidate, and
  // without dropout each epoch sees the very same objective.
  const auto corpus = overfit_fixture();
  std::ofstream tur(f.dir / "turney.tsv");
  for (std::size_t i = 0; i < 10; ++i) {
    tur << corpus.pairs[i].p1;
    for (std::size_t j = 0; j < 5; ++j) tur << '\t' << corpus.table.word((i * 3 + j * 7) % 50);
    tur << "\t" << i % 5 << "\n";
  }
  tur.close();
  std::ofstream(f.dir / "fixed.conf") << "hidden_dim = 8\nbatch_size = 4\nmax_epochs = 5\nk_contrasts = 4\n"
                                          "dropout_rate = 0\nlr = 0\nearly_stop_patience = 100\n";
  REQUIRE(cli({"train", "--task-train", "turney", "--task-file", (f.dir / "turney.tsv").string(),
               "--embeddings", f.embeddings.string(), "--config", (f.dir / "fixed.conf").string(),
               "--out", (f.dir / "t.ckpt").string(), "--deterministic"})
              .code == kExitOk);
  const std::string metrics = slurp(f.dir / "t.ckpt.metrics.tsv");
  std::istringstream lines(metrics);
  std::string line, first_loss;
  std::getline(lines, line);
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto a = line.find('\t');
    const std::string loss = line.substr(a + 1, line.find('\t', a + 1) - a - 1);
    if (rows++ == 0) first_loss = loss;
    CHECK(loss == first_loss);
  }
  CHECK(rows == 5);
}

TEST_CASE("eval: AVG ranking golden value, chance calibration, SUM turney10 = turney5") {
  const auto f = fixture_files("eval");
  // The noisy scaling corpus keeps the AVG baseline away from 0 and 1.
  const auto noisy = scaling_corpus(400, 1);
  write_embeddings(noisy.table, f.dir / "noisy.txt");
  write_pairs_tsv(f.dir / "noisy.tsv", noisy.pairs);
  const auto avg = cli({"eval", "--baseline", "avg", "--task", "ranking", "--data",
                        (f.dir / "noisy.tsv").string(), "--embeddings", (f.dir / "noisy.txt").string(),
                        "--k", "99", "--seed", "3"});
  REQUIRE(avg.code == kExitOk);
  const AvgEncoder encoder(noisy.table);
  const double oracle = brute_force_ranking(encoder, noisy.pairs, phrase_pool(noisy.pairs), 99, 3);
  CHECK(avg.out == "task\tencoder\tk\tn\toov_skipped\taccuracy\nranking\tavg\t99\t400\t0\t" +
                       format_double(oracle) + "\n");
  CHECK(oracle == 0.31);  // frozen from the brute-force scorer
  const auto corpus = overfit_fixture();

  // Chance-level harness.
  const auto dir = f.dir;
  {
    std::ofstream tur(dir / "random_turney.tsv");
    for (const auto& ex : random_turney_examples(2000, 17)) {
      tur << ex.bigram;
      for (const auto& c : ex.candidates) tur << '\t' << c;
      tur << '\t' << ex.answer_index << '\n';
    }
  }
  const auto rnd = cli({"eval", "--baseline", "random", "--task", "turney5", "--data",
                        (dir / "random_turney.tsv").string(), "--seed", "4"});
  REQUIRE(rnd.code == kExitOk);
  const double acc = std::stod(rnd.out.substr(rnd.out.rfind('\t') + 1));
  CHECK(std::abs(acc - 0.20) <= 0.04);

  {
    std::ofstream tur(dir / "fixture_turney.tsv");
    for (std::size_t i = 0; i < 20; ++i) {
      tur << corpus.pairs[i].p1;
      for (std::size_t j = 0; j < 5; ++j) tur << '\t' << corpus.table.word((i * 3 + j * 7) % 50);
      tur << '\t' << i % 5 << '\n';
    }
  }
  auto sum_acc = [&](const std::string& task) {
    const auto r = cli({"eval", "--baseline", "sum", "--task", task, "--data",
                        (dir / "fixture_turney.tsv").string(), "--embeddings", f.embeddings.string()});
    REQUIRE(r.code == kExitOk);
    return r.out.substr(r.out.rfind('\t') + 1);
  };
  CHECK(sum_acc("turney5") == sum_acc("turney10"));
}

TEST_CASE("eval: checkpoint/embedding dimension mismatch names both dims") {
  const auto f = fixture_files("eval_dims");
  REQUIRE(cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
               f.config.string(), "--set", "max_epochs=1", "--out", (f.dir / "m.ckpt").string()})
              .code == kExitOk);
  std::ofstream(f.dir / "small.txt") << "black 1 2\ncat 3 4\n";
  const auto r = cli({"eval", "--ckpt", (f.dir / "m.ckpt").string(), "--task", "ranking", "--data",
                      (f.data / "test.tsv").string(), "--embeddings", (f.dir / "small.txt").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("8") != std::string::npos);
  CHECK(r.err.find("2-dim") != std::string::npos);

  const auto ok = cli({"eval", "--ckpt", (f.dir / "m.ckpt").string(), "--task", "ranking", "--data",
                       (f.data / "test.tsv").string(), "--embeddings", f.embeddings.string(), "--k",
                       "9", "--out", (f.dir / "report.tsv").string()});
  CHECK(ok.code == kExitOk);
  CHECK(slurp(f.dir / "report.tsv").rfind("task\tencoder", 0) == 0);
  CHECK(fs::exists(f.dir / "report.tsv.manifest"));
}

TEST_CASE("embed: deterministic vectors, OOV sidecar, loadable output") {
  const auto f = fixture_files("embed");
  REQUIRE(cli({"train", "--data", f.data.string(), "--embeddings", f.embeddings.string(), "--config",
               f.config.string(), "--set", "max_epochs=1", "--out", (f.dir / "m.ckpt").string()})
              .code == kExitOk);
  std::ofstream(f.dir / "phrases.txt") << "black cat\nunknown thing\n\nBlack Cat\ncat black\n";
  const auto r = cli({"embed", "--ckpt", (f.dir / "m.ckpt").string(), "--embeddings",
                      f.embeddings.string(), "--phrases", (f.dir / "phrases.txt").string(), "--out",
                      (f.dir / "out.txt").string()});
  REQUIRE(r.code == kExitOk);
  const std::string oov = slurp(f.dir / "out.txt.oov");
  CHECK(oov.find("unknown thing") != std::string::npos);
  const std::string body = slurp(f.dir / "out.txt");
  CHECK(body.find("unknown") == std::string::npos);

  EmbeddingLoadReport report;
  const EmbeddingTable loaded = load_embeddings(f.dir / "out.txt", std::size_t{8}, true, &report);
  CHECK(loaded.size() == 2);
  CHECK(report.duplicates == 1);  // "Black Cat" normalizes to the same key
  CHECK(loaded.contains("black_cat"));
  CHECK(loaded.contains("cat_black"));
  const auto lines = body.substr(0, body.find('\n'));
  const auto third = body.substr(body.find('\n') + 1);
  CHECK(third.rfind(lines, 0) == 0);  // identical vectors for the repeated phrase

  std::ofstream(f.dir / "empty.txt") << "\n  \n";
  CHECK(cli({"embed", "--ckpt", (f.dir / "m.ckpt").string(), "--embeddings", f.embeddings.string(),
             "--phrases", (f.dir / "empty.txt").string(), "--out", (f.dir / "e.txt").string()})
            .code == kExitUsage);
}

TEST_CASE("gradcheck passes, including the scalar case; the corrupted build fails") {
  const auto d = cli({"gradcheck"});
  INFO(d.out);
  CHECK(d.code == kExitOk);
  CHECK(d.out.find("FAIL") == std::string::npos);
  CHECK(cli({"gradcheck", "--dims", "1", "--len", "1"}).code == kExitOk);
  CHECK(exit_status(std::string(PGRU_CORRUPT_GRADCHECK) + " gradcheck > /dev/null 2>&1") == kExitCheckFailed);
  CHECK(exit_status(std::string(PGRU_TOOL) + " gradcheck --dims 2 --len 2 > /dev/null 2>&1") == kExitOk);
}

TEST_CASE("sweep emits one row per cell") {
  const auto f = fixture_files("sweep");
  const auto r = cli({"sweep", "--data", f.data.string(), "--embeddings", f.embeddings.string(),
                      "--config", f.config.string(), "--set", "max_epochs=1", "--fractions", "0.5",
                      "1", "--ks", "3", "9", "--eval-k", "9", "--deterministic"});
  REQUIRE(r.code == kExitOk);
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 5);
}
