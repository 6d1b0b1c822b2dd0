#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/corpus.hpp"
#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

// Stacked graph-convolution weights plus one gate weight per layer. Layer
// weights map the previous width to `width`; gate weights map the trigger
// embedding to `width`. No bias terms.
struct GcnParams {
  std::vector<Tensor> layer_weights;
  std::vector<Tensor> gate_weights;

  std::size_t layers() const { return layer_weights.size(); }
  std::size_t width() const { return layer_weights.empty() ? 0 : layer_weights[0].dim(1); }

  static GcnParams init(std::size_t layers, std::size_t input_dim, std::size_t width,
                        std::size_t embed_dim, Rng& rng) {
    GcnParams p;
    auto mat = [&](std::size_t r, std::size_t c) {
      Tensor t = Tensor::zeros({r, c}, true);
      double k = 1.0 / std::sqrt(static_cast<double>(r));
      for (double& v : t.values()) v = rng.uniform(-k, k);
      return t;
    };
    for (std::size_t l = 0; l < layers; ++l) {
      p.layer_weights.push_back(mat(l == 0 ? input_dim : width, width));
      p.gate_weights.push_back(mat(embed_dim, width));
    }
    return p;
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    for (std::size_t l = 0; l < layer_weights.size(); ++l) {
      out.emplace_back(prefix + ".layer" + std::to_string(l) + ".w", layer_weights[l]);
      out.emplace_back(prefix + ".layer" + std::to_string(l) + ".w_gate", gate_weights[l]);
    }
  }
};

// One convolution step: average each node's neighborhood (self-loop
// included in the neighbor lists), project, rectify.
inline Tensor gcn_layer(const Tensor& prev, const SentenceGraph& graph, const Tensor& weight) {
  if (prev.rank() != 2 || prev.dim(0) != graph.n) {
    throw std::runtime_error("gcn_layer: " + shape_str(prev.shape()) + " vs graph of " +
                             std::to_string(graph.n) + " nodes");
  }
  if (weight.rank() != 2 || weight.dim(0) != prev.dim(1)) {
    detail::shape_error("gcn_layer", prev.shape(), weight.shape());
  }
  return relu(matmul(group_mean(prev, graph.neighbors), weight));
}

// Per-layer gate vectors, each sigmoid(gate_weight applied to the trigger
// candidate's embedding). Components are strictly inside (0, 1).
inline std::vector<Tensor> compute_gates(const Tensor& trigger_embedding,
                                         const GcnParams& params) {
  std::vector<Tensor> gates;
  gates.reserve(params.layers());
  for (const Tensor& w : params.gate_weights) {
    gates.push_back(sigmoid(matmul(trigger_embedding, w)));
  }
  return gates;
}

// filtered[l]: every row of layer l scaled by that layer's own gate.
// pooled[k][l]: component-wise max over rows of layer l scaled by gate k.
// pooled[l][l] is the pool of filtered[l] itself.
struct GateApplication {
  std::vector<Tensor> filtered;
  std::vector<std::vector<Tensor>> pooled;
};

inline GateApplication apply_gates(const std::vector<Tensor>& hidden,
                                   const std::vector<Tensor>& gates) {
  if (hidden.size() != gates.size()) {
    throw std::runtime_error("apply_gates: " + std::to_string(hidden.size()) + " layers vs " +
                             std::to_string(gates.size()) + " gates");
  }
  const std::size_t layers = hidden.size();
  GateApplication out;
  out.filtered.reserve(layers);
  out.pooled.assign(layers, {});
  std::vector<std::vector<Tensor>> cross(layers);
  for (std::size_t k = 0; k < layers; ++k) {
    cross[k].reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      cross[k].push_back(row_broadcast_mul(hidden[l], gates[k]));
    }
  }
  for (std::size_t l = 0; l < layers; ++l) out.filtered.push_back(cross[l][l]);
  for (std::size_t k = 0; k < layers; ++k) {
    out.pooled[k].reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      out.pooled[k].push_back(max_pool_rows(cross[k][l]));
    }
  }
  return out;
}

// Cosine penalty pushing different layers' gates to pass distinct
// information through the same hidden vectors: for each layer l, the pool
// under its own gate is compared against the pools of the later gates
// applied to that same layer. The 1/(L(L-1)) coefficient is kept even
// though the sum has L(L-1)/2 terms; `pair_mean` switches to averaging
// over pairs instead.
inline Tensor gate_diversity_loss(const std::vector<std::vector<Tensor>>& pooled,
                                  bool pair_mean = false) {
  const std::size_t layers = pooled.size();
  if (layers < 2) return Tensor::scalar(0.0);
  Tensor sum = Tensor::scalar(0.0);
  std::size_t pairs = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t k = l + 1; k < layers; ++k) {
      sum = add(sum, cosine(pooled[l][l], pooled[k][l]));
      ++pairs;
    }
  }
  double denom = pair_mean ? static_cast<double>(pairs)
                           : static_cast<double>(layers * (layers - 1));
  return scale(sum, 1.0 / denom);
}

}  // namespace ggcn
