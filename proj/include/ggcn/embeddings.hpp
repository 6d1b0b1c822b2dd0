#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ggcn/corpus.hpp"
#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

// Serves per-token embedding vectors. Lookup mode resolves tokens against a
// table (optionally trainable) with a shared UNK fallback; contextual mode
// serves precomputed per-sentence matrices verbatim and is always frozen.
struct EmbeddingProvider {
  enum class Mode { Lookup, Contextual };

  Mode mode = Mode::Lookup;
  std::size_t dim = 0;
  bool trainable = false;

  // Lookup mode.
  std::vector<std::string> vocab;  // insertion order, determines parameter order
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Tensor> vectors;     // one {dim} tensor per vocab entry
  Tensor unk;

  // Contextual mode: one frozen row tensor per token per sentence.
  std::vector<std::vector<Tensor>> contextual;

  const Tensor& lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? unk : vectors[it->second];
  }
};

namespace detail {

inline bool parse_real(const std::string& s, double& out) {
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline EmbeddingProvider make_lookup(std::size_t dim, bool trainable, Rng& rng) {
  EmbeddingProvider p;
  p.mode = EmbeddingProvider::Mode::Lookup;
  p.dim = dim;
  p.trainable = trainable;
  p.unk = Tensor::zeros({dim}, trainable);
  for (double& v : p.unk.values()) v = rng.uniform(-0.1, 0.1);
  return p;
}

}  // namespace detail

// Text table: optional "V D" count header, then one token followed by D
// reals per line. Unknown tokens fall back to a shared UNK vector drawn
// uniformly from [-0.1, 0.1] with the run seed.
inline EmbeddingProvider load_lookup_embeddings(std::istream& in, bool trainable, Rng& rng) {
  EmbeddingProvider p;
  std::size_t line_no = 0;
  bool first_data_line = true;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    if (first_data_line && fields.size() == 2) {
      int v = 0, d = 0;
      if (detail::parse_int(fields[0], v) && detail::parse_int(fields[1], d)) {
        first_data_line = false;
        continue;  // count header
      }
    }
    first_data_line = false;
    if (fields.size() < 2) {
      throw std::runtime_error("embeddings: line " + std::to_string(line_no) +
                               ": expected a token and at least one value");
    }
    std::vector<double> values(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!detail::parse_real(fields[i], values[i - 1])) {
        throw std::runtime_error("embeddings: line " + std::to_string(line_no) +
                                 ": bad value '" + fields[i] + "'");
      }
    }
    if (p.dim == 0) {
      p.dim = values.size();
    } else if (values.size() != p.dim) {
      throw std::runtime_error("embeddings: line " + std::to_string(line_no) + ": dimension " +
                               std::to_string(values.size()) + " does not match " +
                               std::to_string(p.dim));
    }
    if (p.index.count(fields[0])) {
      throw std::runtime_error("embeddings: line " + std::to_string(line_no) +
                               ": duplicate token '" + fields[0] + "'");
    }
    p.index.emplace(fields[0], p.vocab.size());
    p.vocab.push_back(fields[0]);
    Shape row_shape{values.size()};
    p.vectors.push_back(Tensor::from_values(std::move(row_shape), std::move(values), trainable));
  }
  p.mode = EmbeddingProvider::Mode::Lookup;
  p.trainable = trainable;
  if (p.dim == 0) p.dim = 1;  // degenerate file: UNK-only provider
  p.unk = Tensor::zeros({p.dim}, trainable);
  for (double& v : p.unk.values()) v = rng.uniform(-0.1, 0.1);
  return p;
}

inline EmbeddingProvider load_lookup_embeddings(const std::string& path, bool trainable,
                                                Rng& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("embeddings: cannot open " + path);
  return load_lookup_embeddings(in, trainable, rng);
}

// Blocks of n lines x d reals, blank-line separated, aligned 1:1 with the
// corpus sentences. Always frozen.
inline EmbeddingProvider load_contextual_embeddings(std::istream& in,
                                                    const std::vector<Sentence>& corpus) {
  EmbeddingProvider p;
  p.mode = EmbeddingProvider::Mode::Contextual;

  std::vector<std::vector<std::vector<double>>> blocks;
  std::vector<std::vector<double>> current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&]() {
    if (!current.empty()) {
      blocks.push_back(std::move(current));
      current.clear();
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    std::istringstream ss(line);
    std::vector<double> row;
    std::string f;
    while (ss >> f) {
      double v = 0.0;
      if (!detail::parse_real(f, v)) {
        throw std::runtime_error("contextual: line " + std::to_string(line_no) +
                                 ": bad value '" + f + "'");
      }
      row.push_back(v);
    }
    if (p.dim == 0) {
      p.dim = row.size();
    } else if (row.size() != p.dim) {
      throw std::runtime_error("contextual: line " + std::to_string(line_no) + ": dimension " +
                               std::to_string(row.size()) + " does not match " +
                               std::to_string(p.dim));
    }
    current.push_back(std::move(row));
  }
  flush();

  if (blocks.size() != corpus.size()) {
    throw std::runtime_error("contextual: file has " + std::to_string(blocks.size()) +
                             " sentence blocks, corpus has " + std::to_string(corpus.size()));
  }
  for (std::size_t si = 0; si < blocks.size(); ++si) {
    if (blocks[si].size() != corpus[si].size()) {
      throw std::runtime_error("contextual: sentence " + std::to_string(si + 1) + " has " +
                               std::to_string(blocks[si].size()) + " rows, expected " +
                               std::to_string(corpus[si].size()));
    }
    std::vector<Tensor> rows;
    rows.reserve(blocks[si].size());
    for (auto& row : blocks[si]) {
      Shape row_shape{row.size()};
      rows.push_back(Tensor::from_values(std::move(row_shape), std::move(row), false));
    }
    p.contextual.push_back(std::move(rows));
  }
  if (p.dim == 0) p.dim = 1;
  return p;
}

inline EmbeddingProvider load_contextual_embeddings(const std::string& path,
                                                    const std::vector<Sentence>& corpus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("contextual: cannot open " + path);
  return load_contextual_embeddings(in, corpus);
}

// Builds a trainable lookup table over a corpus vocabulary with uniform
// [-0.1, 0.1] init. Used when no embedding file is supplied.
inline EmbeddingProvider random_lookup_embeddings(const std::vector<Sentence>& corpus,
                                                  std::size_t dim, bool trainable, Rng& rng) {
  EmbeddingProvider p = detail::make_lookup(dim, trainable, rng);
  for (const Sentence& s : corpus) {
    for (const std::string& tok : s.tokens) {
      if (p.index.count(tok)) continue;
      Tensor vec = Tensor::zeros({dim}, trainable);
      for (double& v : vec.values()) v = rng.uniform(-0.1, 0.1);
      p.index.emplace(tok, p.vocab.size());
      p.vocab.push_back(tok);
      p.vectors.push_back(vec);
    }
  }
  return p;
}

// Stacks per-token embedding rows into an n x d matrix. Rows carry
// gradients only for a trainable lookup table.
inline Tensor encode(const Sentence& s, std::size_t sentence_ordinal,
                     const EmbeddingProvider& provider) {
  std::vector<Tensor> rows;
  rows.reserve(s.size());
  if (provider.mode == EmbeddingProvider::Mode::Lookup) {
    for (const std::string& tok : s.tokens) rows.push_back(provider.lookup(tok));
  } else {
    if (sentence_ordinal >= provider.contextual.size()) {
      throw std::runtime_error("contextual: sentence ordinal " +
                               std::to_string(sentence_ordinal) + " not covered");
    }
    const auto& block = provider.contextual[sentence_ordinal];
    if (block.size() != s.size()) {
      throw std::runtime_error("contextual: stored block does not match sentence length");
    }
    rows = block;
  }
  return stack_rows(rows);
}

}  // namespace ggcn
