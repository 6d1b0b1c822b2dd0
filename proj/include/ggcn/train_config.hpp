#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ggcn/consistency.hpp"

namespace ggcn {

// Every knob that shapes the model and its training run. Loss terms can be
// ablated independently; turning the gates off also forces the filtered
// vectors back to the plain hidden vectors and disables the diversity term.
struct TrainConfig {
  double alpha = 0.1;              // weight of the gate-diversity term
  double beta = 0.2;               // weight of the score-consistency term
  double learning_rate = 5e-5;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 1;

  bool use_gates = true;
  bool use_diversity = true;
  bool use_consistency = true;
  IscForm isc_form = IscForm::Kl;
  double negative_keep_prob = 1.0;  // training-time subsampling of "None" candidates

  int gcn_layers = 2;
  int bilstm_hidden = 128;  // per direction
  int gcn_width = 128;
  int score_dim = 128;
  int classifier_hidden = 128;

  int embed_dim = 32;               // only used when no embedding file is given
  bool embeddings_trainable = true;  // lookup tables only; contextual is always frozen
  bool gate_from_h0 = false;         // gates read the encoder state instead of the embedding
  bool gd_pair_mean = false;         // average the diversity sum over pairs

  bool diversity_active() const { return use_gates && use_diversity; }

  void validate() const {
    if (alpha < 0.0) throw std::runtime_error("config: alpha must be >= 0");
    if (beta < 0.0) throw std::runtime_error("config: beta must be >= 0");
    if (!(learning_rate > 0.0)) throw std::runtime_error("config: lr must be > 0");
    if (epochs < 1) throw std::runtime_error("config: epochs must be >= 1");
    if (batch_size < 1) throw std::runtime_error("config: batch-size must be >= 1");
    if (gcn_layers < 1) throw std::runtime_error("config: gcn-layers must be >= 1");
    if (negative_keep_prob < 0.0 || negative_keep_prob > 1.0) {
      throw std::runtime_error("config: negative-keep-prob must be in [0, 1]");
    }
    if (bilstm_hidden < 1 || gcn_width < 1 || score_dim < 1 || classifier_hidden < 1 ||
        embed_dim < 1) {
      throw std::runtime_error("config: layer widths must be >= 1");
    }
  }
};

}  // namespace ggcn
