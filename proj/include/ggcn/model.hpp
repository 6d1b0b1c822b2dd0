#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ggcn/bilstm.hpp"
#include "ggcn/consistency.hpp"
#include "ggcn/corpus.hpp"
#include "ggcn/embeddings.hpp"
#include "ggcn/gcn.hpp"
#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"
#include "ggcn/train_config.hpp"

namespace ggcn {

// Classification head: one hidden layer with ReLU, then a linear map to the
// event types (including "None").
struct ClassifierParams {
  Tensor hidden_weight, hidden_bias;
  Tensor out_weight, out_bias;

  static ClassifierParams init(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t classes, Rng& rng) {
    ClassifierParams p;
    auto fill = [&](Tensor& t, std::size_t fan_in) {
      double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& v : t.values()) v = rng.uniform(-k, k);
    };
    p.hidden_weight = Tensor::zeros({input_dim, hidden_dim}, true);
    p.hidden_bias = Tensor::zeros({hidden_dim}, true);
    p.out_weight = Tensor::zeros({hidden_dim, classes}, true);
    p.out_bias = Tensor::zeros({classes}, true);
    fill(p.hidden_weight, input_dim);
    fill(p.hidden_bias, input_dim);
    fill(p.out_weight, hidden_dim);
    fill(p.out_bias, hidden_dim);
    return p;
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".hidden.w", hidden_weight);
    out.emplace_back(prefix + ".hidden.b", hidden_bias);
    out.emplace_back(prefix + ".out.w", out_weight);
    out.emplace_back(prefix + ".out.b", out_bias);
  }
};

// Prediction feature: [trigger embedding ; filtered trigger row ; max-pool
// over all filtered rows], in exactly that order.
inline Tensor build_feature(const Tensor& trigger_embedding, const Tensor& filtered_rows,
                            std::size_t trigger) {
  Tensor own_row = select_row(filtered_rows, trigger);
  Tensor pooled = max_pool_rows(filtered_rows);
  return concat({trigger_embedding, own_row, pooled});
}

inline Tensor classify_logits(const Tensor& feature, const ClassifierParams& params) {
  Tensor hidden = relu(add(matmul(feature, params.hidden_weight), params.hidden_bias));
  return add(matmul(hidden, params.out_weight), params.out_bias);
}

inline Tensor classify(const Tensor& feature, const ClassifierParams& params) {
  return softmax(classify_logits(feature, params));
}

// Weighted sum of the enabled loss terms. Disabled terms contribute
// exactly zero (they are simply absent).
inline Tensor combined_loss(const Tensor& classification, const std::optional<Tensor>& diversity,
                            const std::optional<Tensor>& consistency, double alpha,
                            double beta) {
  Tensor total = classification;
  if (diversity) total = add(total, scale(*diversity, alpha));
  if (consistency) total = add(total, scale(*consistency, beta));
  return total;
}

inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// The full trigger classifier: embeddings -> BiLSTM -> gated GCN stack ->
// feature assembly -> classifier, plus the two auxiliary losses.
class Model {
 public:
  Model(const TrainConfig& cfg, EmbeddingProvider provider, std::vector<std::string> labels,
        Rng& rng)
      : cfg_(cfg), provider_(std::move(provider)), labels_(std::move(labels)) {
    cfg_.validate();
    if (labels_.size() < 2) {
      throw std::runtime_error("model: need at least two classes including '" + kNoneLabel +
                               "'");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) label_index_[labels_[i]] = i;
    if (!label_index_.count(kNoneLabel)) {
      throw std::runtime_error("model: label set must include '" + kNoneLabel + "'");
    }
    std::size_t d_e = provider_.dim;
    bilstm_ = BiLstmParams::init(d_e, static_cast<std::size_t>(cfg_.bilstm_hidden), rng);
    gcn_ = GcnParams::init(static_cast<std::size_t>(cfg_.gcn_layers), 2 * cfg_.bilstm_hidden,
                           static_cast<std::size_t>(cfg_.gcn_width), d_e, rng);
    std::size_t feature_dim = d_e + 2 * static_cast<std::size_t>(cfg_.gcn_width);
    consistency_ = ConsistencyParams::init(feature_dim, static_cast<std::size_t>(cfg_.gcn_width),
                                           static_cast<std::size_t>(cfg_.score_dim), rng);
    classifier_ = ClassifierParams::init(feature_dim,
                                         static_cast<std::size_t>(cfg_.classifier_hidden),
                                         labels_.size(), rng);
  }

  const TrainConfig& config() const { return cfg_; }
  const EmbeddingProvider& provider() const { return provider_; }
  const std::vector<std::string>& labels() const { return labels_; }

  int label_index(const std::string& label) const {
    auto it = label_index_.find(label);
    return it == label_index_.end() ? -1 : static_cast<int>(it->second);
  }

  // Swap the embedding provider (same dimension), e.g. to score a second
  // corpus in contextual mode. Parameters stay shared.
  void set_provider(EmbeddingProvider provider) {
    if (provider.dim != provider_.dim) {
      throw std::runtime_error("model: provider dimension " + std::to_string(provider.dim) +
                               " does not match " + std::to_string(provider_.dim));
    }
    provider_ = std::move(provider);
  }

  // Same parameters under different loss toggles/weights; the architecture
  // dimensions must match. Used for ablation comparisons.
  Model with_config(const TrainConfig& cfg) const {
    if (cfg.gcn_layers != cfg_.gcn_layers || cfg.bilstm_hidden != cfg_.bilstm_hidden ||
        cfg.gcn_width != cfg_.gcn_width || cfg.score_dim != cfg_.score_dim ||
        cfg.classifier_hidden != cfg_.classifier_hidden) {
      throw std::runtime_error("model: with_config cannot change architecture dimensions");
    }
    Model copy = *this;
    copy.cfg_ = cfg;
    copy.cfg_.validate();
    return copy;
  }

  // Embedding table first (vocab order, then UNK), then the network blocks
  // in construction order. Order is part of the checkpoint contract.
  std::vector<std::pair<std::string, Tensor>> all_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    if (provider_.mode == EmbeddingProvider::Mode::Lookup) {
      for (std::size_t i = 0; i < provider_.vectors.size(); ++i) {
        out.emplace_back("embed." + std::to_string(i), provider_.vectors[i]);
      }
      out.emplace_back("embed.unk", provider_.unk);
    }
    bilstm_.collect("bilstm", out);
    gcn_.collect("gcn", out);
    consistency_.collect("score", out);
    classifier_.collect("classifier", out);
    return out;
  }

  std::vector<std::pair<std::string, Tensor>> trainable_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& entry : all_parameters()) {
      if (entry.second.requires_grad()) out.push_back(entry);
    }
    return out;
  }

  struct Output {
    Tensor class_probs;                    // distribution over labels
    std::size_t predicted = 0;             // argmax label index
    std::optional<Tensor> classification;  // set when a gold label is given
    std::optional<Tensor> diversity;       // set when gates + diversity are on
    std::optional<Tensor> consistency;     // set when the consistency term is on
    std::optional<Tensor> total;           // set when a gold label is given
    GraphScores graph_scores;
    std::vector<double> model_probs;       // plain copy of the model-score distribution
    std::vector<Tensor> hidden_layers;     // convolution outputs per layer
    std::vector<Tensor> filtered_layers;   // gated outputs per layer (== hidden when gates off)
  };

  // Runs one candidate. `gold` is a label index, or -1 to skip the loss
  // terms (prediction only). Records on the active tape, if any.
  Output forward(const Sentence& sentence, std::size_t ordinal, std::size_t trigger,
                 int gold = -1) const {
    if (trigger >= sentence.size()) {
      throw std::runtime_error("model: trigger index out of range");
    }
    Output out;

    Tensor embeddings = encode(sentence, ordinal, provider_);
    Tensor encoded = bilstm(embeddings, bilstm_);
    SentenceGraph graph = build_graph(sentence);

    std::vector<Tensor> hidden;
    Tensor prev = encoded;
    for (std::size_t l = 0; l < gcn_.layers(); ++l) {
      prev = gcn_layer(prev, graph, gcn_.layer_weights[l]);
      hidden.push_back(prev);
    }

    Tensor trigger_embedding = select_row(embeddings, trigger);
    std::vector<Tensor> filtered;
    if (cfg_.use_gates) {
      Tensor gate_source =
          cfg_.gate_from_h0 ? select_row(encoded, trigger) : trigger_embedding;
      auto gates = compute_gates(gate_source, gcn_);
      if (cfg_.diversity_active()) {
        auto ga = apply_gates(hidden, gates);
        filtered = std::move(ga.filtered);
        out.diversity = gate_diversity_loss(ga.pooled, cfg_.gd_pair_mean);
      } else {
        for (std::size_t l = 0; l < hidden.size(); ++l) {
          filtered.push_back(row_broadcast_mul(hidden[l], gates[l]));
        }
      }
    } else {
      filtered = hidden;
    }

    Tensor feature = build_feature(trigger_embedding, filtered.back(), trigger);
    Tensor logits = classify_logits(feature, classifier_);
    out.class_probs = softmax(logits);
    out.predicted = argmax(out.class_probs.values());
    out.hidden_layers = hidden;
    out.filtered_layers = filtered;

    out.graph_scores = graph_distances(sentence, trigger);
    ModelScores scores = model_scores(feature, filtered.back(), consistency_);
    out.model_probs = scores.probs.values();

    if (gold >= 0) {
      if (static_cast<std::size_t>(gold) >= labels_.size()) {
        throw std::runtime_error("model: gold label index out of range");
      }
      out.classification = cross_entropy(logits, static_cast<std::size_t>(gold));
      if (cfg_.use_consistency) {
        Tensor graph_probs = Tensor::vector(out.graph_scores.probs);
        out.consistency = isc_loss(graph_probs, scores.probs, cfg_.isc_form);
      }
      out.total = combined_loss(*out.classification, out.diversity, out.consistency,
                                cfg_.alpha, cfg_.beta);
    }
    return out;
  }

 private:
  TrainConfig cfg_;
  EmbeddingProvider provider_;
  BiLstmParams bilstm_;
  GcnParams gcn_;
  ConsistencyParams consistency_;
  ClassifierParams classifier_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> label_index_;
};

}  // namespace ggcn
