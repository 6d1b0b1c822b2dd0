#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ggcn/checkpoint.hpp"
#include "ggcn/cli.hpp"
#include "ggcn/config.hpp"

using namespace ggcn;

namespace {

struct RunOutput {
  int code = 0;
  std::string out;
  std::string err;
};

RunOutput run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunOutput r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ggcn_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  auto path = temp_dir() / name;
  std::ofstream f(path);
  f << content;
  return path.string();
}

std::string data_path(const std::string& name) {
  return std::string(GGCN_DATA_DIR) + "/" + name;
}

std::vector<std::string> toy_train_args(const std::string& out_path, int epochs,
                                        std::uint64_t seed) {
  return {"train",           "--corpus",     data_path("toy_train.tsv"),
          "--embeddings",    data_path("toy_embeddings.txt"),
          "--bilstm-hidden", "16",           "--gcn-width",
          "16",              "--score-dim",  "16",
          "--classifier-hidden", "16",       "--lr",
          "0.005",           "--batch-size", "16",
          "--epochs",        std::to_string(epochs),
          "--seed",          std::to_string(seed),
          "--out",           out_path};
}

}  // namespace

TEST_CASE("config file parsing") {
  SECTION("values, comments, and blanks") {
    std::istringstream in("# a comment\nalpha = 0.25\n\nbatch-size=64  # trailing\n");
    auto entries = parse_config_file(in, "test");
    CHECK(entries.at("alpha") == "0.25");
    CHECK(entries.at("batch-size") == "64");
  }
  SECTION("missing equals sign is rejected") {
    std::istringstream in("alpha 0.25\n");
    CHECK_THROWS_AS(parse_config_file(in, "test"), UsageError);
  }
  SECTION("unknown keys are rejected") {
    auto path = write_file("bad.conf", "not-a-key = 1\n");
    RunConfig cfg;
    CHECK_THROWS_WITH(apply_config_file(cfg, path),
                      Catch::Matchers::ContainsSubstring("not-a-key"));
  }
  SECTION("option setters validate values") {
    RunConfig cfg;
    CHECK_THROWS_AS(option_table().at("alpha")(cfg, "abc"), UsageError);
    CHECK_THROWS_AS(option_table().at("epochs")(cfg, "1.5"), UsageError);
    option_table().at("no-gates")(cfg, "true");
    CHECK_FALSE(cfg.train.use_gates);
  }
}

TEST_CASE("usage errors exit with code 2") {
  SECTION("missing required corpus names the flag") {
    auto r = run_cli({"train"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--corpus") != std::string::npos);
  }
  SECTION("unknown flag") {
    auto r = run_cli({"train", "--wat", "1"});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
  }
  SECTION("bad flag value") {
    auto r = run_cli({"train", "--corpus", "x.tsv", "--alpha", "-1"});
    CHECK(r.code == 2);
  }
  SECTION("missing file is a runtime error, not a usage error") {
    auto r = run_cli({"evaluate", "--corpus", "/nonexistent.tsv", "--checkpoint", "x"});
    CHECK(r.code == 1);
    CHECK(r.err.find("nonexistent") != std::string::npos);
  }
}

TEST_CASE("gradcheck command") {
  auto r = run_cli({"gradcheck", "--seed", "7"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  double reported = 1.0;
  std::sscanf(r.out.c_str(), "max relative error %lf", &reported);
  CHECK(reported < 1e-4);
}

TEST_CASE("config precedence: flag beats file beats default") {
  auto conf = write_file("layered.conf", "alpha = 0.3\nbeta = 0.9\nepochs = 1\n");
  auto ckpt = (temp_dir() / "layered.ckpt").string();
  auto args = toy_train_args(ckpt, 1, 3);
  args.push_back("--config");
  args.push_back(conf);
  args.push_back("--alpha");
  args.push_back("0.7");
  auto r = run_cli(args);
  REQUIRE(r.code == 0);

  Model model = load_checkpoint(ckpt);
  CHECK(model.config().alpha == 0.7);                // flag wins over file
  CHECK(model.config().beta == 0.9);                 // file wins over default
  CHECK(model.config().learning_rate == 0.005);      // flag (no file entry)
  CHECK(model.config().negative_keep_prob == 1.0);   // untouched default
}

TEST_CASE("GGCN_CONFIG environment variable supplies the config file") {
  auto ckpt = (temp_dir() / "env.ckpt").string();
  auto conf = write_file("env.conf",
                         "corpus = " + data_path("toy_train.tsv") +
                             "\nembeddings = " + data_path("toy_embeddings.txt") +
                             "\nepochs = 1\nbilstm-hidden = 8\ngcn-width = 8\n"
                             "score-dim = 8\nclassifier-hidden = 8\nout = " + ckpt + "\n");
  setenv("GGCN_CONFIG", conf.c_str(), 1);
  auto r = run_cli({"train"});
  unsetenv("GGCN_CONFIG");
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(ckpt));
}

TEST_CASE("train, evaluate, predict, inspect-scores round trip") {
  auto ckpt = (temp_dir() / "toy.ckpt").string();
  auto r = run_cli(toy_train_args(ckpt, 25, 7));
  REQUIRE(r.code == 0);
  REQUIRE(std::filesystem::exists(ckpt));
  REQUIRE(std::filesystem::exists(ckpt + ".log"));

  SECTION("evaluate prints the tab-separated P/R/F line") {
    auto eval = run_cli({"evaluate", "--corpus", data_path("toy_train.tsv"),
                         "--checkpoint", ckpt});
    REQUIRE(eval.code == 0);
    CHECK(eval.out == "1.000\t1.000\t1.000\n");
  }

  SECTION("predict emits one line per candidate with a probability") {
    auto pred = run_cli({"predict", "--corpus", data_path("toy_train.tsv"),
                         "--checkpoint", ckpt});
    REQUIRE(pred.code == 0);
    std::istringstream lines(pred.out);
    std::string line;
    std::size_t count = 0, non_none = 0;
    while (std::getline(lines, line)) {
      ++count;
      CHECK(std::count(line.begin(), line.end(), '\t') == 4);
      if (line.find("\tNone\t") == std::string::npos) ++non_none;
    }
    auto corpus = load_corpus(data_path("toy_train.tsv"));
    std::size_t tokens = 0;
    for (const auto& s : corpus) tokens += s.size();
    CHECK(count == tokens);
    CHECK(non_none == 16);  // one trigger in each of the 16 event sentences
  }

  SECTION("inspect-scores reproduces the tree distances and distributions") {
    auto inspect = run_cli({"inspect-scores", "--corpus", data_path("demo.tsv"),
                            "--checkpoint", ckpt, "--sentence", "1", "--trigger", "3"});
    REQUIRE(inspect.code == 0);
    std::istringstream lines(inspect.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "#token\tdistance\tp\tq");
    std::vector<int> distances;
    double p_sum = 0.0, q_sum = 0.0;
    std::string tok;
    int d = 0;
    double p = 0.0, q = 0.0;
    std::string line;
    while (std::getline(lines, line)) {
      std::istringstream row(line);
      std::getline(row, tok, '\t');
      row >> d >> p >> q;
      distances.push_back(d);
      p_sum += p;
      q_sum += q;
    }
    CHECK(distances == std::vector<int>{1, 1, 0, 2, 2, 1, 2, 1, 1});
    CHECK(p_sum == Catch::Approx(1.0).margin(2e-6));
    CHECK(q_sum == Catch::Approx(1.0).margin(2e-6));
  }

  SECTION("out-of-range inspect arguments are usage errors") {
    auto bad = run_cli({"inspect-scores", "--corpus", data_path("demo.tsv"),
                        "--checkpoint", ckpt, "--sentence", "99", "--trigger", "1"});
    CHECK(bad.code == 2);
    auto bad_t = run_cli({"inspect-scores", "--corpus", data_path("demo.tsv"),
                          "--checkpoint", ckpt, "--sentence", "1", "--trigger", "99"});
    CHECK(bad_t.code == 2);
  }
}

TEST_CASE("contextual embeddings drive train and evaluate") {
  auto corpus_path = write_file(
      "ctx_train.tsv",
      "1\traid\t0\troot\tAttack\n2\ttown\t1\tobj\tO\n\n"
      "1\tcalm\t2\tamod\tO\n2\tnight\t0\troot\tO\n");
  auto dev_path = write_file("ctx_dev.tsv",
                             "1\traid\t0\troot\tAttack\n2\tcamp\t1\tobj\tO\n");
  // One block per training sentence, then the dev sentence.
  auto ctx_all = write_file("ctx_all.txt",
                            "0.5 -0.2 0.1 0.9\n-0.3 0.8 0.2 -0.1\n\n"
                            "0.1 0.1 -0.5 0.4\n0.7 -0.6 0.3 0.2\n\n"
                            "0.6 -0.1 0.2 0.8\n-0.2 0.9 0.1 -0.3\n");
  auto ctx_dev = write_file("ctx_dev.txt", "0.6 -0.1 0.2 0.8\n-0.2 0.9 0.1 -0.3\n");

  auto ckpt = (temp_dir() / "ctx.ckpt").string();
  auto r = run_cli({"train", "--corpus", corpus_path, "--dev", dev_path,
                    "--contextual", ctx_all, "--epochs", "2", "--batch-size", "4",
                    "--bilstm-hidden", "4", "--gcn-width", "4", "--score-dim", "4",
                    "--classifier-hidden", "4", "--seed", "5", "--out", ckpt});
  REQUIRE(r.code == 0);

  SECTION("evaluate requires the contextual file again") {
    auto missing = run_cli({"evaluate", "--corpus", dev_path, "--checkpoint", ckpt});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--contextual") != std::string::npos);
  }
  SECTION("evaluate with the dev blocks prints a P/R/F line") {
    auto eval = run_cli({"evaluate", "--corpus", dev_path, "--checkpoint", ckpt,
                         "--contextual", ctx_dev});
    REQUIRE(eval.code == 0);
    CHECK(std::count(eval.out.begin(), eval.out.end(), '\t') == 2);
  }
  SECTION("both embedding flags together are rejected") {
    auto both = run_cli({"train", "--corpus", corpus_path, "--contextual", ctx_all,
                         "--embeddings", data_path("toy_embeddings.txt")});
    CHECK(both.code == 2);
  }
}

TEST_CASE("CLI train is reproducible bit for bit given a seed") {
  auto read_bytes = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
  };
  auto a_path = (temp_dir() / "det_a.ckpt").string();
  auto b_path = (temp_dir() / "det_b.ckpt").string();
  REQUIRE(run_cli(toy_train_args(a_path, 3, 21)).code == 0);
  REQUIRE(run_cli(toy_train_args(b_path, 3, 21)).code == 0);
  CHECK(read_bytes(a_path) == read_bytes(b_path));
  CHECK(read_bytes(a_path + ".log") == read_bytes(b_path + ".log"));
  CHECK_FALSE(read_bytes(a_path).empty());
}

TEST_CASE("zeroed score projections give uniform model scores") {
  auto corpus = load_corpus(data_path("demo.tsv"));
  TrainConfig cfg;
  cfg.embed_dim = 8;
  cfg.bilstm_hidden = 6;
  cfg.gcn_width = 5;
  cfg.score_dim = 4;
  cfg.classifier_hidden = 6;
  Rng rng(5);
  auto provider = random_lookup_embeddings(corpus, 8, true, rng);
  Model model(cfg, std::move(provider), {"None", "Movement:Transport", "Conflict:Attack"}, rng);
  for (auto& [name, t] : model.all_parameters()) {
    if (name.rfind("score.", 0) == 0) std::fill(t.values().begin(), t.values().end(), 0.0);
  }
  auto ckpt = (temp_dir() / "uniform.ckpt").string();
  save_checkpoint(ckpt, model);

  auto inspect = run_cli({"inspect-scores", "--corpus", data_path("demo.tsv"),
                          "--checkpoint", ckpt, "--sentence", "2", "--trigger", "10"});
  REQUIRE(inspect.code == 0);
  std::istringstream lines(inspect.out);
  std::string line;
  std::getline(lines, line);  // header
  std::vector<double> qs;
  while (std::getline(lines, line)) {
    auto last_tab = line.rfind('\t');
    qs.push_back(std::stod(line.substr(last_tab + 1)));
  }
  REQUIRE(qs.size() == 11);
  for (double q : qs) CHECK(q == Catch::Approx(1.0 / 11).margin(1e-6));
}
