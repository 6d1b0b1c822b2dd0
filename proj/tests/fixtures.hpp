#pragma once

#include <string>
#include <vector>

#include "ggcn/corpus.hpp"
#include "ggcn/rng.hpp"

namespace fixtures {

// Two fully parsed sentences with known tree distances, used across the
// graph and scoring tests.
inline ggcn::Sentence deployed_sentence() {
  ggcn::Sentence s;
  s.tokens = {"They", "also", "deployed", "along", "the", "border", "with", "Israel", "."};
  s.heads = {3, 3, 0, 6, 6, 3, 8, 3, 3};
  s.deprels = {"nsubj", "advmod", "root", "case", "det", "obl", "case", "obl", "punct"};
  s.gold_labels = {"None", "None", "Movement:Transport", "None", "None",
                   "None", "None", "None", "None"};
  return s;
}

inline ggcn::Sentence brawl_sentence() {
  ggcn::Sentence s;
  s.tokens = {"Other", "legislators", "surrounded", "the", "two", "to",
              "head", "off", "a", "brawl", "."};
  s.heads = {2, 3, 0, 5, 3, 7, 3, 7, 10, 7, 3};
  s.deprels = {"amod", "nsubj", "root", "det", "obj", "mark",
               "xcomp", "compound", "det", "obj", "punct"};
  s.gold_labels = {"None", "None", "None", "None", "None", "None",
                   "None", "None", "None", "Conflict:Attack", "None"};
  return s;
}

// Random labeled tree over n tokens in head-index form.
inline ggcn::Sentence random_tree(std::size_t n, ggcn::Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  ggcn::Sentence s;
  s.tokens.assign(n, "w");
  s.heads.assign(n, 0);
  s.deprels.assign(n, "dep");
  s.gold_labels.assign(n, "None");
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t parent = order[rng.index(i)];
    s.heads[order[i]] = static_cast<int>(parent) + 1;
  }
  return s;
}

}  // namespace fixtures
