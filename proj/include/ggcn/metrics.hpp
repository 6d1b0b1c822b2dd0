#pragma once

#include <map>
#include <string>
#include <vector>

#include "ggcn/corpus.hpp"
#include "ggcn/model.hpp"

namespace ggcn {

struct TypeCount {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

// Micro precision/recall/F1 over non-None predictions: a prediction is a
// true positive iff its position and predicted type match a gold non-None
// label. Empty prediction sets score zero precision by convention.
struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t candidates = 0;
  std::size_t true_positives = 0;
  std::size_t predicted_non_none = 0;
  std::size_t gold_non_none = 0;
  std::map<std::string, TypeCount> per_type;
};

inline EvalReport score_predictions(const std::vector<std::string>& predicted,
                                    const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::runtime_error("evaluate: " + std::to_string(predicted.size()) +
                             " predictions vs " + std::to_string(gold.size()) + " gold labels");
  }
  EvalReport r;
  r.candidates = predicted.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    bool pred_event = predicted[i] != kNoneLabel;
    bool gold_event = gold[i] != kNoneLabel;
    if (pred_event) {
      ++r.predicted_non_none;
      ++r.per_type[predicted[i]].predicted;
    }
    if (gold_event) {
      ++r.gold_non_none;
      ++r.per_type[gold[i]].gold;
    }
    if (pred_event && predicted[i] == gold[i]) {
      ++r.true_positives;
      ++r.per_type[predicted[i]].true_positives;
    }
  }
  r.precision = r.predicted_non_none == 0
                    ? 0.0
                    : static_cast<double>(r.true_positives) / r.predicted_non_none;
  r.recall = r.gold_non_none == 0 ? 0.0
                                  : static_cast<double>(r.true_positives) / r.gold_non_none;
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

// Argmax prediction for every candidate in the corpus; runs forward-only
// (no tape) against the current parameters.
inline EvalReport evaluate(const Model& model, const std::vector<Sentence>& corpus) {
  std::vector<std::string> predicted, gold;
  for (std::size_t si = 0; si < corpus.size(); ++si) {
    const Sentence& s = corpus[si];
    for (std::size_t t = 0; t < s.size(); ++t) {
      auto out = model.forward(s, si, t);
      predicted.push_back(model.labels()[out.predicted]);
      gold.push_back(s.gold_labels[t]);
    }
  }
  return score_predictions(predicted, gold);
}

}  // namespace ggcn
