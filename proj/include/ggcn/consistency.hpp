#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

// Projections used for the model-based importance scores: one for the
// prediction feature vector, one for each token's filtered vector. Shared
// output width, no bias.
struct ConsistencyParams {
  Tensor feature_weight;  // {feature_dim, score_dim}
  Tensor token_weight;    // {token_dim, score_dim}

  static ConsistencyParams init(std::size_t feature_dim, std::size_t token_dim,
                                std::size_t score_dim, Rng& rng) {
    ConsistencyParams p;
    auto mat = [&](std::size_t r, std::size_t c) {
      Tensor t = Tensor::zeros({r, c}, true);
      double k = 1.0 / std::sqrt(static_cast<double>(r));
      for (double& v : t.values()) v = rng.uniform(-k, k);
      return t;
    };
    p.feature_weight = mat(feature_dim, score_dim);
    p.token_weight = mat(token_dim, score_dim);
    return p;
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".w_feature", feature_weight);
    out.emplace_back(prefix + ".w_token", token_weight);
  }
};

struct ModelScores {
  Tensor raw;    // {n}, each entry strictly inside (0, score_dim)
  Tensor probs;  // softmax of raw
};

// Score of token i: dot of the sigmoid-projected feature vector with the
// sigmoid-projected filtered vector of token i, then softmax over tokens.
inline ModelScores model_scores(const Tensor& feature, const Tensor& filtered_rows,
                                const ConsistencyParams& params) {
  if (feature.rank() != 1 || feature.dim(0) != params.feature_weight.dim(0)) {
    detail::shape_error("model_scores", feature.shape(), params.feature_weight.shape());
  }
  if (filtered_rows.rank() != 2 || filtered_rows.dim(1) != params.token_weight.dim(0)) {
    detail::shape_error("model_scores", filtered_rows.shape(), params.token_weight.shape());
  }
  Tensor feature_proj = sigmoid(matmul(feature, params.feature_weight));     // {score_dim}
  Tensor token_proj = sigmoid(matmul(filtered_rows, params.token_weight));   // {n, score_dim}
  ModelScores scores;
  scores.raw = matmul(token_proj, feature_proj);  // {n}
  scores.probs = softmax(scores.raw);
  return scores;
}

enum class IscForm { Kl, Literal };

inline const char* isc_form_name(IscForm f) { return f == IscForm::Kl ? "kl" : "literal"; }

inline IscForm parse_isc_form(const std::string& s) {
  if (s == "kl") return IscForm::Kl;
  if (s == "literal") return IscForm::Literal;
  throw std::runtime_error("isc-form must be 'kl' or 'literal', got '" + s + "'");
}

namespace detail {

inline void check_distribution(const Tensor& p, const char* what) {
  double sum = 0.0;
  for (double v : p.values()) {
    if (v < 0.0) throw std::runtime_error(std::string(what) + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-4) {
    throw std::runtime_error(std::string(what) + ": input sums to " + std::to_string(sum) +
                             ", not a distribution");
  }
}

}  // namespace detail

// Divergence between the graph-based and model-based distributions.
// kl:      sum_i p_i * log(p_i / q_i), with 0 log 0 = 0.
// literal: -sum_i p_i * (p_i / q_i).
inline Tensor isc_loss(const Tensor& graph_probs, const Tensor& model_probs, IscForm form) {
  if (graph_probs.rank() != 1 || graph_probs.shape() != model_probs.shape()) {
    detail::shape_error("isc_loss", graph_probs.shape(), model_probs.shape());
  }
  detail::check_distribution(graph_probs, "isc_loss");
  detail::check_distribution(model_probs, "isc_loss");
  const auto& pv = graph_probs.values();
  const auto& qv = model_probs.values();
  for (double q : qv) {
    if (q <= 0.0) throw std::runtime_error("isc_loss: model probabilities must be positive");
  }

  Tensor out = Tensor::zeros({1}, detail::tracked({&graph_probs, &model_probs}));
  double acc = 0.0;
  if (form == IscForm::Kl) {
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] > 0.0) acc += pv[i] * std::log(pv[i] / qv[i]);
    }
  } else {
    for (std::size_t i = 0; i < pv.size(); ++i) acc -= pv[i] * (pv[i] / qv[i]);
  }
  out.values()[0] = acc;
  detail::check_finite(out, "isc_loss");

  if (out.requires_grad()) {
    Tape::active()->record({graph_probs, model_probs}, out,
                           [graph_probs, model_probs, out, form]() {
      double g = out.grad()[0];
      const auto& p = graph_probs.values();
      const auto& q = model_probs.values();
      if (graph_probs.requires_grad()) {
        auto& pg = graph_probs.grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (form == IscForm::Kl) {
            if (p[i] > 0.0) pg[i] += g * (std::log(p[i] / q[i]) + 1.0);
          } else {
            pg[i] += g * (-2.0 * p[i] / q[i]);
          }
        }
      }
      if (model_probs.requires_grad()) {
        auto& qg = model_probs.grad();
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (form == IscForm::Kl) {
            qg[i] += g * (-p[i] / q[i]);
          } else {
            qg[i] += g * (p[i] * p[i] / (q[i] * q[i]));
          }
        }
      }
    });
  }
  return out;
}

}  // namespace ggcn
