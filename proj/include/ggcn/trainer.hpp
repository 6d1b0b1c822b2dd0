#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/adam.hpp"
#include "ggcn/checkpoint.hpp"
#include "ggcn/corpus.hpp"
#include "ggcn/embeddings.hpp"
#include "ggcn/metrics.hpp"
#include "ggcn/model.hpp"
#include "ggcn/train_config.hpp"

namespace ggcn {

// "None" first, then event types in order of first appearance.
inline std::vector<std::string> discover_labels(const std::vector<Sentence>& corpus) {
  std::vector<std::string> labels{kNoneLabel};
  for (const Sentence& s : corpus) {
    for (const std::string& label : s.gold_labels) {
      if (label == kNoneLabel) continue;
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
        labels.push_back(label);
      }
    }
  }
  return labels;
}

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::size_t train_candidates = 0;  // after negative subsampling
  EvalReport dev;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::string log;              // one tab-separated line per epoch
  int best_epoch = 0;           // 1-based; earliest epoch on ties
  double best_f1 = 0.0;
  std::string best_checkpoint;  // serialized checkpoint bytes at the best epoch
};

inline std::string format_epoch_line(const EpochStats& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.4f\t%.4f\t%.4f", e.epoch, e.train_loss,
                e.dev.precision, e.dev.recall, e.dev.f1);
  return buf;
}

// Mini-batched training over shuffled candidates with per-example forward
// passes and gradient accumulation. Deterministic given the seed: the rng
// passed in drives parameter init, negative subsampling, and shuffling, in
// that order. Returns the checkpoint of the best dev-F1 epoch.
inline TrainResult train(const TrainConfig& cfg, const std::vector<Sentence>& corpus,
                         const std::vector<Sentence>& dev, EmbeddingProvider provider,
                         Rng& rng, std::ostream* progress = nullptr,
                         const EmbeddingProvider* dev_provider = nullptr) {
  cfg.validate();
  if (corpus.empty()) throw std::runtime_error("train: empty corpus");

  std::vector<std::string> labels = discover_labels(corpus);
  if (labels.size() < 2) {
    throw std::runtime_error("train: corpus contains no event labels besides '" + kNoneLabel +
                             "'");
  }
  Model model(cfg, std::move(provider), labels, rng);
  Model dev_model = model;  // shares parameters
  if (dev_provider != nullptr) dev_model.set_provider(*dev_provider);

  Adam optimizer(model.trainable_parameters());
  std::vector<Candidate> all_candidates = make_candidates(corpus);

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<Candidate> selected;
    selected.reserve(all_candidates.size());
    for (const Candidate& c : all_candidates) {
      if (c.gold == kNoneLabel && cfg.negative_keep_prob < 1.0 &&
          rng.uniform() >= cfg.negative_keep_prob) {
        continue;
      }
      selected.push_back(c);
    }
    rng.shuffle(selected);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < selected.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(selected.size(), start + static_cast<std::size_t>(cfg.batch_size));
      optimizer.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const Candidate& cand = selected[i];
        Tape tape;
        TapeScope scope(tape);
        auto out = model.forward(corpus[cand.sentence], cand.sentence, cand.trigger,
                                 model.label_index(cand.gold));
        tape.backward(*out.total);
        loss_sum += out.total->value();
        ++seen;
      }
      optimizer.step(cfg.learning_rate, 1.0 / static_cast<double>(end - start));
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = seen == 0 ? 0.0 : loss_sum / static_cast<double>(seen);
    stats.train_candidates = seen;
    stats.dev = evaluate(dev_model, dev);
    std::string line = format_epoch_line(stats);
    result.log += line;
    result.log += '\n';
    if (progress != nullptr) (*progress) << line << '\n';

    if (result.best_epoch == 0 || stats.dev.f1 > result.best_f1) {
      result.best_epoch = epoch;
      result.best_f1 = stats.dev.f1;
      result.best_checkpoint = checkpoint_bytes(model);
    }
    result.epochs.push_back(std::move(stats));
  }
  return result;
}

}  // namespace ggcn
