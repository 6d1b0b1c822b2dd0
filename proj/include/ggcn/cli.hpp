#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ggcn/checkpoint.hpp"
#include "ggcn/config.hpp"
#include "ggcn/corpus.hpp"
#include "ggcn/embeddings.hpp"
#include "ggcn/gradcheck.hpp"
#include "ggcn/metrics.hpp"
#include "ggcn/model.hpp"
#include "ggcn/trainer.hpp"

namespace ggcn {
namespace cli {

inline constexpr double kGradCheckTolerance = 1e-4;

namespace detail {

inline const std::vector<std::string>& flag_keys() {
  static const std::vector<std::string> keys = {
      "no-gates",     "no-diversity", "no-consistency",
      "gate-from-h0", "gd-pair-mean", "frozen-embeddings",
  };
  return keys;
}

inline bool is_flag_key(const std::string& key) {
  const auto& keys = flag_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

inline std::vector<Sentence> need_corpus(const RunConfig& cfg) {
  if (cfg.corpus_path.empty()) throw UsageError(cfg.command + " requires --corpus");
  return load_corpus(cfg.corpus_path);
}

inline std::string need_checkpoint(const RunConfig& cfg) {
  if (cfg.checkpoint_path.empty()) throw UsageError(cfg.command + " requires --checkpoint");
  return cfg.checkpoint_path;
}

// Contextual blocks for a sub-range of the corpus the provider was loaded
// against; ordinals are shifted so the slice is self-contained.
inline EmbeddingProvider slice_contextual(const EmbeddingProvider& p, std::size_t start,
                                          std::size_t count) {
  EmbeddingProvider out;
  out.mode = EmbeddingProvider::Mode::Contextual;
  out.dim = p.dim;
  out.contextual.assign(p.contextual.begin() + static_cast<std::ptrdiff_t>(start),
                        p.contextual.begin() + static_cast<std::ptrdiff_t>(start + count));
  return out;
}

inline Model load_model(const RunConfig& cfg, const std::vector<Sentence>& corpus) {
  Model model = load_checkpoint(need_checkpoint(cfg));
  if (model.provider().mode == EmbeddingProvider::Mode::Contextual) {
    if (cfg.contextual_path.empty()) {
      throw UsageError("checkpoint uses contextual embeddings; pass --contextual");
    }
    model.set_provider(load_contextual_embeddings(cfg.contextual_path, corpus));
  }
  return model;
}

inline std::string format_prf(double p, double r, double f) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f\t%.3f\t%.3f", p, r, f);
  return buf;
}

inline Sentence gradcheck_fixture() {
  Sentence s;
  s.tokens = {"alpha", "beta", "gamma"};
  s.heads = {2, 0, 2};
  s.deprels = {"dep", "root", "dep"};
  s.gold_labels = {"None", "Attack", "None"};
  return s;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out) {
  auto corpus = need_corpus(cfg);
  bool own_dev = cfg.dev_path.empty();
  auto dev = own_dev ? corpus : load_corpus(cfg.dev_path);
  if (!cfg.embeddings_path.empty() && !cfg.contextual_path.empty()) {
    throw UsageError("pass either --embeddings or --contextual, not both");
  }

  Rng rng(cfg.train.seed);
  EmbeddingProvider provider;
  EmbeddingProvider dev_provider;
  const EmbeddingProvider* dev_provider_ptr = nullptr;
  if (!cfg.contextual_path.empty()) {
    if (own_dev) {
      provider = load_contextual_embeddings(cfg.contextual_path, corpus);
    } else {
      // One file covering the training sentences followed by the dev ones.
      std::vector<Sentence> combined = corpus;
      combined.insert(combined.end(), dev.begin(), dev.end());
      EmbeddingProvider full = load_contextual_embeddings(cfg.contextual_path, combined);
      provider = slice_contextual(full, 0, corpus.size());
      dev_provider = slice_contextual(full, corpus.size(), dev.size());
      dev_provider_ptr = &dev_provider;
    }
  } else if (!cfg.embeddings_path.empty()) {
    provider = load_lookup_embeddings(cfg.embeddings_path, cfg.train.embeddings_trainable, rng);
  } else {
    provider = random_lookup_embeddings(corpus, static_cast<std::size_t>(cfg.train.embed_dim),
                                        cfg.train.embeddings_trainable, rng);
  }

  TrainResult result = train(cfg.train, corpus, dev, std::move(provider), rng, &out,
                             dev_provider_ptr);

  std::string out_path = cfg.out_path.empty() ? "ggcn.ckpt" : cfg.out_path;
  {
    std::ofstream ckpt(out_path, std::ios::binary);
    if (!ckpt) throw std::runtime_error("cannot write checkpoint to " + out_path);
    ckpt.write(result.best_checkpoint.data(),
               static_cast<std::streamsize>(result.best_checkpoint.size()));
  }
  {
    std::ofstream log(out_path + ".log");
    if (!log) throw std::runtime_error("cannot write log to " + out_path + ".log");
    log << result.log;
  }
  out << "best epoch " << result.best_epoch << " dev F1 ";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", result.best_f1);
  out << buf << "; checkpoint written to " << out_path << "\n";
  return 0;
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  auto corpus = need_corpus(cfg);
  Model model = load_model(cfg, corpus);
  EvalReport report = evaluate(model, corpus);
  out << format_prf(report.precision, report.recall, report.f1) << "\n";
  return 0;
}

inline int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  auto corpus = need_corpus(cfg);
  Model model = load_model(cfg, corpus);
  std::ostringstream lines;
  for (std::size_t si = 0; si < corpus.size(); ++si) {
    const Sentence& s = corpus[si];
    for (std::size_t t = 0; t < s.size(); ++t) {
      auto result = model.forward(s, si, t);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", result.class_probs.value(result.predicted));
      lines << (si + 1) << '\t' << (t + 1) << '\t' << s.tokens[t] << '\t'
            << model.labels()[result.predicted] << '\t' << buf << '\n';
    }
  }
  if (cfg.out_path.empty()) {
    out << lines.str();
  } else {
    std::ofstream f(cfg.out_path);
    if (!f) throw std::runtime_error("cannot write " + cfg.out_path);
    f << lines.str();
  }
  return 0;
}

inline int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  Sentence fixture = gradcheck_fixture();
  std::vector<Sentence> corpus{fixture};
  TrainConfig tc = cfg.train;
  tc.embed_dim = 6;
  tc.bilstm_hidden = 5;
  tc.gcn_width = 4;
  tc.score_dim = 4;
  tc.classifier_hidden = 6;

  GradCheckOptions opt;
  GradCheckResult result;
  std::uint64_t seed = cfg.train.seed;
  for (int attempt = 0; attempt < 5; ++attempt, ++seed) {
    Rng rng(seed);
    auto provider = random_lookup_embeddings(corpus, static_cast<std::size_t>(tc.embed_dim),
                                             true, rng);
    Model model(tc, std::move(provider), discover_labels(corpus), rng);
    auto params = model.trainable_parameters();
    auto f = [&]() {
      return *model.forward(fixture, 0, 1, model.label_index("Attack")).total;
    };
    result = grad_check(f, params, opt);
    if (result.kink_margin > 10.0 * opt.eps) break;
    out << "seed " << seed << " lands within " << result.kink_margin
        << " of a ReLU/max kink; resampling\n";
  }

  for (const auto& issue : result.issues) {
    out << "non-finite evaluation at " << issue.param << "[" << issue.index << "]\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3e (tolerance %.0e)",
                result.max_rel_error, kGradCheckTolerance);
  bool pass = result.passes(kGradCheckTolerance);
  out << buf << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

inline int cmd_inspect_scores(const RunConfig& cfg, std::ostream& out) {
  auto corpus = need_corpus(cfg);
  Model model = load_model(cfg, corpus);
  if (cfg.sentence < 1 || static_cast<std::size_t>(cfg.sentence) > corpus.size()) {
    throw UsageError("--sentence must be in [1, " + std::to_string(corpus.size()) + "]");
  }
  const Sentence& s = corpus[static_cast<std::size_t>(cfg.sentence) - 1];
  if (cfg.trigger < 1 || static_cast<std::size_t>(cfg.trigger) > s.size()) {
    throw UsageError("--trigger must be in [1, " + std::to_string(s.size()) + "]");
  }
  std::size_t trigger = static_cast<std::size_t>(cfg.trigger) - 1;
  auto result = model.forward(s, static_cast<std::size_t>(cfg.sentence) - 1, trigger);

  out << "#token\tdistance\tp\tq\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f", result.graph_scores.distances[i],
                  result.graph_scores.probs[i], result.model_probs[i]);
    out << s.tokens[i] << '\t' << buf << '\n';
  }
  return 0;
}

}  // namespace detail

// Parses argv (without the program name), merges flag > config file >
// default, and dispatches. Returns the process exit code: 0 success,
// 1 runtime failure, 2 usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trigger-word event detection with a gated dependency-graph GCN"};
  app.name("ggcn");
  app.require_subcommand(1);

  std::map<std::string, std::string> provided;
  std::string config_flag;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option_function<std::string>(
        "--config", [&](const std::string& v) { config_flag = v; },
        "config file with key = value lines (also via GGCN_CONFIG)");
    for (const auto& [key, setter] : option_table()) {
      (void)setter;
      std::string name = "--" + key;
      if (detail::is_flag_key(key)) {
        sub->add_flag_callback(
            name, [&provided, key = key]() { provided[key] = "true"; });
      } else {
        sub->add_option_function<std::string>(
            name, [&provided, key = key](const std::string& v) { provided[key] = v; });
      }
    }
  };

  add_common(app.add_subcommand("train", "train a model and write the best checkpoint"));
  add_common(app.add_subcommand("evaluate", "print tab-separated P/R/F for a checkpoint"));
  add_common(app.add_subcommand("predict", "per-candidate predicted type with probability"));
  add_common(app.add_subcommand("gradcheck",
                                "check analytic gradients against central differences"));
  add_common(app.add_subcommand("inspect-scores",
                                "per-token graph and model importance scores"));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();

    std::string config_path = config_flag;
    if (config_path.empty()) {
      const char* env = std::getenv("GGCN_CONFIG");
      if (env != nullptr) config_path = env;
    }
    if (!config_path.empty()) {
      apply_config_file(cfg, config_path);
      cfg.config_path = config_path;
    }
    for (const auto& [key, value] : provided) option_table().at(key)(cfg, value);
    try {
      cfg.train.validate();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }

    if (cfg.command == "train") return detail::cmd_train(cfg, out);
    if (cfg.command == "evaluate") return detail::cmd_evaluate(cfg, out);
    if (cfg.command == "predict") return detail::cmd_predict(cfg, out);
    if (cfg.command == "gradcheck") return detail::cmd_gradcheck(cfg, out);
    if (cfg.command == "inspect-scores") return detail::cmd_inspect_scores(cfg, out);
    throw UsageError("unknown command " + cfg.command);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cli
}  // namespace ggcn
