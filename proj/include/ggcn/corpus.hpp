#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "ggcn/tensor.hpp"

namespace ggcn {

inline const std::string kNoneLabel = "None";

// A dependency-annotated, event-labeled sentence. Token indices are 0-based
// everywhere in code; `heads` keeps the file convention (0 = root, otherwise
// the 1-based index of the head token).
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<int> heads;
  std::vector<std::string> deprels;
  std::vector<std::string> gold_labels;

  std::size_t size() const { return tokens.size(); }

  // 0-based parent of token i, or -1 for the root.
  int parent(std::size_t i) const { return heads[i] - 1; }

  bool operator==(const Sentence&) const = default;
};

// Token graph: dependency edges, their reverses, and a self-loop at every
// node. Neighbor lists are sorted, deduplicated, 0-based, and include the
// node itself.
struct SentenceGraph {
  std::size_t n = 0;
  std::vector<std::vector<int>> neighbors;
};

struct Candidate {
  std::size_t sentence = 0;  // ordinal into the corpus
  std::size_t trigger = 0;   // 0-based token index
  std::string gold;
};

// Per-token scores derived from tree distance to the trigger candidate:
// raw score -d_i, then softmax-normalized.
struct GraphScores {
  std::vector<int> distances;
  std::vector<double> raw;
  std::vector<double> probs;
};

namespace detail {

[[noreturn]] inline void corpus_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("corpus: line " + std::to_string(line) + ": " + what);
}

inline bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoi(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  if (line.find('\t') != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
  } else {
    std::istringstream ss(line);
    std::string col;
    while (ss >> col) cols.push_back(col);
  }
  return cols;
}

inline void validate_tree(const Sentence& s, std::size_t first_line) {
  const std::size_t n = s.size();
  int roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.heads[i] < 0 || static_cast<std::size_t>(s.heads[i]) > n) {
      corpus_error(first_line + i, "head index " + std::to_string(s.heads[i]) + " out of range");
    }
    if (s.heads[i] == 0) ++roots;
  }
  if (roots != 1) {
    corpus_error(first_line, "sentence must have exactly one root, found " +
                                 std::to_string(roots));
  }
  // Every token must reach the root by following heads, with no cycles.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t hops = 0;
    int cur = static_cast<int>(i);
    while (s.heads[cur] != 0) {
      cur = s.parent(cur);
      if (++hops > n) corpus_error(first_line + i, "head indices form a cycle");
    }
  }
}

}  // namespace detail

// Reads the 5-column format: 1-based index, token, head (0 = root),
// dependency relation, event label. Sentences are separated by blank lines;
// lines starting with '#' are skipped. "O" is accepted as an alias for the
// "None" label.
inline std::vector<Sentence> parse_corpus(std::istream& in) {
  std::vector<Sentence> corpus;
  Sentence current;
  std::size_t line_no = 0;
  std::size_t block_start = 0;

  auto flush = [&]() {
    if (current.size() == 0) return;
    detail::validate_tree(current, block_start);
    corpus.push_back(std::move(current));
    current = Sentence{};
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    auto cols = detail::split_columns(line);
    if (cols.size() != 5) {
      detail::corpus_error(line_no, "expected 5 tab-separated columns, got " +
                                        std::to_string(cols.size()));
    }
    if (current.size() == 0) block_start = line_no;
    int index = 0;
    if (!detail::parse_int(cols[0], index) ||
        index != static_cast<int>(current.size()) + 1) {
      detail::corpus_error(line_no, "token index '" + cols[0] + "' is not sequential");
    }
    int head = 0;
    if (!detail::parse_int(cols[2], head)) {
      detail::corpus_error(line_no, "head '" + cols[2] + "' is not an integer");
    }
    current.tokens.push_back(cols[1]);
    current.heads.push_back(head);
    current.deprels.push_back(cols[3]);
    current.gold_labels.push_back(cols[4] == "O" ? kNoneLabel : cols[4]);
  }
  flush();
  return corpus;
}

inline std::vector<Sentence> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot open " + path);
  return parse_corpus(in);
}

inline std::string serialize_corpus(const std::vector<Sentence>& corpus) {
  std::ostringstream out;
  for (std::size_t si = 0; si < corpus.size(); ++si) {
    const Sentence& s = corpus[si];
    if (si) out << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << (i + 1) << '\t' << s.tokens[i] << '\t' << s.heads[i] << '\t' << s.deprels[i]
          << '\t' << s.gold_labels[i] << '\n';
    }
  }
  return out.str();
}

inline SentenceGraph build_graph(const Sentence& s) {
  SentenceGraph g;
  g.n = s.size();
  g.neighbors.assign(g.n, {});
  for (std::size_t i = 0; i < g.n; ++i) {
    g.neighbors[i].push_back(static_cast<int>(i));  // self-loop
    int p = s.parent(i);
    if (p >= 0) {
      g.neighbors[i].push_back(p);                        // reverse of head->dependent
      g.neighbors[p].push_back(static_cast<int>(i));      // the dependency edge itself
    }
  }
  for (auto& list : g.neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return g;
}

// BFS over the undirected head relation; self-loops play no role in the
// path length. `trigger` is a 0-based token index.
inline GraphScores graph_distances(const Sentence& s, std::size_t trigger) {
  const std::size_t n = s.size();
  if (trigger >= n) {
    throw std::runtime_error("graph_distances: trigger " + std::to_string(trigger) +
                             " out of range for " + std::to_string(n) + " tokens");
  }
  std::vector<std::vector<int>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    int p = s.parent(i);
    if (p >= 0) {
      adj[i].push_back(p);
      adj[p].push_back(static_cast<int>(i));
    }
  }
  GraphScores scores;
  scores.distances.assign(n, -1);
  scores.distances[trigger] = 0;
  std::queue<int> frontier;
  frontier.push(static_cast<int>(trigger));
  while (!frontier.empty()) {
    int node = frontier.front();
    frontier.pop();
    for (int next : adj[node]) {
      if (scores.distances[next] == -1) {
        scores.distances[next] = scores.distances[node] + 1;
        frontier.push(next);
      }
    }
  }
  scores.raw.resize(n);
  for (std::size_t i = 0; i < n; ++i) scores.raw[i] = -static_cast<double>(scores.distances[i]);

  double mx = *std::max_element(scores.raw.begin(), scores.raw.end());
  double sum = 0.0;
  scores.probs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores.probs[i] = std::exp(scores.raw[i] - mx);
    sum += scores.probs[i];
  }
  for (double& p : scores.probs) p /= sum;
  return scores;
}

// One candidate per token; the gold event type comes from the token label.
inline std::vector<Candidate> make_candidates(const Sentence& s, std::size_t sentence_ordinal) {
  std::vector<Candidate> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.push_back(Candidate{sentence_ordinal, i, s.gold_labels[i]});
  }
  return out;
}

inline std::vector<Candidate> make_candidates(const std::vector<Sentence>& corpus) {
  std::vector<Candidate> out;
  for (std::size_t si = 0; si < corpus.size(); ++si) {
    auto one = make_candidates(corpus[si], si);
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

}  // namespace ggcn
